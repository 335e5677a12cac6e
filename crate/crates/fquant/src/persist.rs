//! On-disk formats: codebook and plan text records, quantizer
//! directories, CSV emitters and the run manifest.
//!
//! Codebook record: `r=<val>`, `censor=<val|none>`, then one codepoint
//! per line in increasing order, 17 significant digits. Plan record:
//! `N=<budget>`, `m=<depth>`, then one size per line. Product quantizers
//! persist as a directory holding the plan plus `books/<j>.book`; the
//! Poisson quantizer as a `meta` record plus `timeBooks/<n>.book` and
//! `sizeBooks/<n>.book`.

use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::allocation::AllocationPlan;
use crate::cppq::PoissonQuantizer;
use crate::error::{Error, Result};
use crate::procsim::JumpLaw;
use crate::product::{DistortionReport, ProductQuantizer};
use crate::quant1d::{Codebook1D, PierceCurve};
use crate::ratelab::{RateReport, RegularityEstimate};

fn fmt_f64(x: f64) -> String {
    format!("{x:.17e}")
}

fn parse_f64(s: &str, path: &Path) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Parse {
        path: path.display().to_string(),
        detail: format!("bad float {s:?}: {e}"),
    })
}

fn expect_key<'a>(line: &'a str, key: &str, path: &Path) -> Result<&'a str> {
    line.strip_prefix(key).and_then(|rest| rest.strip_prefix('=')).ok_or_else(|| Error::Parse {
        path: path.display().to_string(),
        detail: format!("expected `{key}=...`, got {line:?}"),
    })
}

pub fn write_codebook(path: &Path, cb: &Codebook1D) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "r={}", fmt_f64(cb.r())).expect("string write");
    match cb.censor() {
        Some(c) => writeln!(out, "censor={}", fmt_f64(c)).expect("string write"),
        None => writeln!(out, "censor=none").expect("string write"),
    }
    for &p in cb.points() {
        writeln!(out, "{}", fmt_f64(p)).expect("string write");
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_codebook(path: &Path) -> Result<Codebook1D> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let r_line = lines.next().ok_or_else(|| Error::Parse {
        path: path.display().to_string(),
        detail: "empty codebook file".into(),
    })?;
    let r = parse_f64(expect_key(r_line, "r", path)?, path)?;
    let censor_line = lines.next().ok_or_else(|| Error::Parse {
        path: path.display().to_string(),
        detail: "missing censor line".into(),
    })?;
    let censor_val = expect_key(censor_line, "censor", path)?;
    let censor =
        if censor_val.trim() == "none" { None } else { Some(parse_f64(censor_val, path)?) };
    let points = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| parse_f64(l, path))
        .collect::<Result<Vec<_>>>()?;
    Codebook1D::new(points, r, censor)
}

pub fn write_plan(path: &Path, plan: &AllocationPlan) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "N={}", plan.budget()).expect("string write");
    writeln!(out, "m={}", plan.depth()).expect("string write");
    for &s in plan.sizes() {
        writeln!(out, "{s}").expect("string write");
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_plan(path: &Path) -> Result<AllocationPlan> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let budget: u64 = expect_key(
        lines.next().ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            detail: "empty plan file".into(),
        })?,
        "N",
        path,
    )?
    .trim()
    .parse()
    .map_err(|e| Error::Parse { path: path.display().to_string(), detail: format!("{e}") })?;
    let depth: usize = expect_key(
        lines.next().ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            detail: "missing depth line".into(),
        })?,
        "m",
        path,
    )?
    .trim()
    .parse()
    .map_err(|e| Error::Parse { path: path.display().to_string(), detail: format!("{e}") })?;
    let sizes = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.trim().parse::<u64>().map_err(|e| Error::Parse {
                path: path.display().to_string(),
                detail: format!("bad size {l:?}: {e}"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if sizes.len() != depth {
        return Err(Error::Parse {
            path: path.display().to_string(),
            detail: format!("plan declares m={depth} but has {} sizes", sizes.len()),
        });
    }
    AllocationPlan::new(sizes, budget, 1.0, false)
}

pub fn write_product_quantizer(dir: &Path, q: &ProductQuantizer) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir.join("books"))?;
    let mut files = Vec::new();
    let plan_path = dir.join("plan.txt");
    write_plan(&plan_path, q.plan())?;
    files.push(plan_path);
    for (j, cb) in q.codebooks().iter().enumerate() {
        let p = dir.join("books").join(format!("{j}.book"));
        write_codebook(&p, cb)?;
        files.push(p);
    }
    Ok(files)
}

pub fn read_product_quantizer(dir: &Path, horizon: f64, r: f64) -> Result<ProductQuantizer> {
    let plan = read_plan(&dir.join("plan.txt"))?;
    let books = (0..plan.depth())
        .map(|j| read_codebook(&dir.join("books").join(format!("{j}.book"))))
        .collect::<Result<Vec<_>>>()?;
    ProductQuantizer::from_parts(plan, books, horizon, r)
}

fn jump_law_token(law: Option<JumpLaw>) -> String {
    match law {
        None => "none".into(),
        Some(JumpLaw::Gaussian { mean, std }) => {
            format!("gaussian:{},{}", fmt_f64(mean), fmt_f64(std))
        }
        Some(JumpLaw::Uniform { lo, hi }) => format!("uniform:{},{}", fmt_f64(lo), fmt_f64(hi)),
        Some(JumpLaw::Exponential { rate }) => format!("exponential:{}", fmt_f64(rate)),
        Some(JumpLaw::TwoPoint { lo, hi, prob_hi }) => {
            format!("twopoint:{},{},{}", fmt_f64(lo), fmt_f64(hi), fmt_f64(prob_hi))
        }
    }
}

fn parse_jump_law(token: &str, path: &Path) -> Result<Option<JumpLaw>> {
    let token = token.trim();
    if token == "none" {
        return Ok(None);
    }
    let (name, args) = token.split_once(':').ok_or_else(|| Error::Parse {
        path: path.display().to_string(),
        detail: format!("bad jump law {token:?}"),
    })?;
    let vals = args
        .split(',')
        .map(|s| parse_f64(s, path))
        .collect::<Result<Vec<_>>>()?;
    let law = match (name, vals.as_slice()) {
        ("gaussian", [mean, std]) => JumpLaw::Gaussian { mean: *mean, std: *std },
        ("uniform", [lo, hi]) => JumpLaw::Uniform { lo: *lo, hi: *hi },
        ("exponential", [rate]) => JumpLaw::Exponential { rate: *rate },
        ("twopoint", [lo, hi, prob_hi]) => {
            JumpLaw::TwoPoint { lo: *lo, hi: *hi, prob_hi: *prob_hi }
        }
        _ => {
            return Err(Error::Parse {
                path: path.display().to_string(),
                detail: format!("bad jump law {token:?}"),
            })
        }
    };
    Ok(Some(law))
}

pub fn write_poisson_quantizer(dir: &Path, q: &PoissonQuantizer) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir.join("timeBooks"))?;
    let mut files = Vec::new();
    let (n1, n2) = q.budgets_split();
    let mut meta = String::new();
    writeln!(meta, "lambda={}", fmt_f64(q.lambda())).expect("string write");
    writeln!(meta, "horizon={}", fmt_f64(q.horizon())).expect("string write");
    writeln!(meta, "r={}", fmt_f64(q.r())).expect("string write");
    writeln!(meta, "p={}", fmt_f64(q.p())).expect("string write");
    writeln!(meta, "delta={}", fmt_f64(q.delta())).expect("string write");
    writeln!(meta, "budget={}", q.budget()).expect("string write");
    writeln!(meta, "time_budget={n1}").expect("string write");
    writeln!(meta, "size_budget={n2}").expect("string write");
    writeln!(meta, "jump_law={}", jump_law_token(q.jump_law())).expect("string write");
    let meta_path = dir.join("meta");
    fs::write(&meta_path, meta)?;
    files.push(meta_path);
    for (i, cb) in q.time_books().iter().enumerate() {
        let p = dir.join("timeBooks").join(format!("{}.book", i + 1));
        write_codebook(&p, cb)?;
        files.push(p);
    }
    if !q.size_books().is_empty() || q.default_size_book().is_some() {
        fs::create_dir_all(dir.join("sizeBooks"))?;
        for (i, cb) in q.size_books().iter().enumerate() {
            let p = dir.join("sizeBooks").join(format!("{}.book", i + 1));
            write_codebook(&p, cb)?;
            files.push(p);
        }
        if let Some(cb) = q.default_size_book() {
            let p = dir.join("sizeBooks").join("default.book");
            write_codebook(&p, cb)?;
            files.push(p);
        }
    }
    Ok(files)
}

pub fn read_poisson_quantizer(dir: &Path) -> Result<PoissonQuantizer> {
    let meta_path = dir.join("meta");
    let text = fs::read_to_string(&meta_path)?;
    let mut lambda = None;
    let mut horizon = None;
    let mut r = None;
    let mut p = None;
    let mut delta = None;
    let mut budget = None;
    let mut time_budget = None;
    let mut size_budget = None;
    let mut jump_law = None;
    for line in text.lines() {
        let (key, val) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: meta_path.display().to_string(),
            detail: format!("bad meta line {line:?}"),
        })?;
        match key {
            "lambda" => lambda = Some(parse_f64(val, &meta_path)?),
            "horizon" => horizon = Some(parse_f64(val, &meta_path)?),
            "r" => r = Some(parse_f64(val, &meta_path)?),
            "p" => p = Some(parse_f64(val, &meta_path)?),
            "delta" => delta = Some(parse_f64(val, &meta_path)?),
            "budget" => budget = val.trim().parse::<u64>().ok(),
            "time_budget" => time_budget = val.trim().parse::<u64>().ok(),
            "size_budget" => size_budget = val.trim().parse::<u64>().ok(),
            "jump_law" => jump_law = Some(parse_jump_law(val, &meta_path)?),
            _ => {
                return Err(Error::Parse {
                    path: meta_path.display().to_string(),
                    detail: format!("unknown meta key {key:?}"),
                })
            }
        }
    }
    let missing = |k: &str| Error::Parse {
        path: meta_path.display().to_string(),
        detail: format!("missing meta key {k}"),
    };
    let mut time_books = Vec::new();
    for n in 1.. {
        let p = dir.join("timeBooks").join(format!("{n}.book"));
        if !p.exists() {
            break;
        }
        time_books.push(read_codebook(&p)?);
    }
    let mut size_books = Vec::new();
    for n in 1.. {
        let p = dir.join("sizeBooks").join(format!("{n}.book"));
        if !p.exists() {
            break;
        }
        size_books.push(read_codebook(&p)?);
    }
    let default_path = dir.join("sizeBooks").join("default.book");
    let default_size_book =
        if default_path.exists() { Some(read_codebook(&default_path)?) } else { None };
    PoissonQuantizer::from_books(
        lambda.ok_or_else(|| missing("lambda"))?,
        horizon.ok_or_else(|| missing("horizon"))?,
        r.ok_or_else(|| missing("r"))?,
        p.ok_or_else(|| missing("p"))?,
        delta.ok_or_else(|| missing("delta"))?,
        budget.ok_or_else(|| missing("budget"))?,
        time_budget.ok_or_else(|| missing("time_budget"))?,
        size_budget.ok_or_else(|| missing("size_budget"))?,
        time_books,
        size_books,
        default_size_book,
        jump_law.ok_or_else(|| missing("jump_law"))?,
    )
}

pub fn write_distortion_csv(path: &Path, reports: &[DistortionReport]) -> Result<()> {
    let mut out = String::from("N,r,p,estimate,stderr,n_paths\n");
    for rep in reports {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            rep.budget, rep.r, rep.p, rep.estimate, rep.std_error, rep.n_paths
        )
        .expect("string write");
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_pierce_csv(path: &Path, law: &str, curve: &PierceCurve) -> Result<()> {
    let mut out = String::from("law,r,delta,N,e_N,N_e_N\n");
    for pt in &curve.points {
        writeln!(out, "{law},{},{},{},{},{}", curve.r, curve.delta, pt.size, pt.error, pt.scaled)
            .expect("string write");
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_regularity_csv(path: &Path, family: &str, est: &RegularityEstimate) -> Result<()> {
    let mut out = String::from("family,rho,h,phi_hat\n");
    for &(h, phi) in &est.samples {
        writeln!(out, "{family},{},{h},{phi}", est.rho).expect("string write");
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_report_csv(path: &Path, reports: &[RateReport]) -> Result<()> {
    let mut out = String::from(
        "family,rho,r,p,b_regularity,b_rate,c_subexp,R2_polylog,R2_subexp,agreement\n",
    );
    for rep in reports {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            rep.family,
            rep.rho,
            rep.r,
            rep.p,
            rep.b_regularity,
            rep.b_rate,
            rep.c_subexp,
            rep.r2_polylog,
            rep.r2_subexp,
            rep.agreement
        )
        .expect("string write");
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        write!(out, "{b:02x}").expect("string write");
    }
    out
}

/// Writes `manifest.txt`: version, config echo with its hash, and one
/// `sha256 <relative path>` line per output file.
pub fn write_manifest(dir: &Path, config_echo: &str, files: &[PathBuf]) -> Result<PathBuf> {
    let mut out = String::new();
    writeln!(out, "fquant={}", env!("CARGO_PKG_VERSION")).expect("string write");
    writeln!(out, "config_sha256={}", sha256_hex(config_echo.as_bytes())).expect("string write");
    writeln!(out, "--- config").expect("string write");
    for line in config_echo.lines() {
        writeln!(out, "  {line}").expect("string write");
    }
    writeln!(out, "--- files").expect("string write");
    let mut rows: Vec<(String, String)> = files
        .iter()
        .map(|f| {
            let bytes = fs::read(f)?;
            let rel = f.strip_prefix(dir).unwrap_or(f).display().to_string();
            Ok((rel, sha256_hex(&bytes)))
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort();
    for (rel, hash) in rows {
        writeln!(out, "{hash}  {rel}").expect("string write");
    }
    let path = dir.join("manifest.txt");
    fs::write(&path, out)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cppq::{build_poisson_quantizer, CppqParams};
    use crate::grid::{PathSample, TimeGrid};
    use crate::product::TrainParams;
    use crate::quant1d::SampleSet;
    use crate::streams::SeedStreams;

    fn tmpdir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("fquant-persist-{tag}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn codebook_round_trip_preserves_bits() {
        let dir = tmpdir("book");
        let cb = Codebook1D::new(
            vec![-0.797_884_560_802_865_4, 0.123456789012345678, 2.5],
            2.0,
            Some(3.5),
        )
        .unwrap();
        let path = dir.join("a.book");
        write_codebook(&path, &cb).unwrap();
        let back = read_codebook(&path).unwrap();
        assert_eq!(back.points(), cb.points());
        assert_eq!(back.r(), 2.0);
        assert_eq!(back.censor(), Some(3.5));
    }

    #[test]
    fn plan_round_trip() {
        let dir = tmpdir("plan");
        let plan = AllocationPlan::new(vec![20, 7, 3, 2, 1], 4096, 1.0, false).unwrap();
        let path = dir.join("plan.txt");
        write_plan(&path, &plan).unwrap();
        let back = read_plan(&path).unwrap();
        assert_eq!(back.sizes(), plan.sizes());
        assert_eq!(back.budget(), 4096);
    }

    #[test]
    fn product_quantizer_round_trip_quantizes_identically() {
        let dir = tmpdir("pq");
        let plan = AllocationPlan::new(vec![3, 2], 8, 1.0, false).unwrap();
        let samples = vec![
            SampleSet::new(vec![-1.0, -0.5, 0.0, 0.5, 1.0, 1.5], "a").unwrap(),
            SampleSet::new(vec![-2.0, -1.0, 1.0, 2.0], "b").unwrap(),
        ];
        let q = ProductQuantizer::build(plan, &samples, 1.0, 2.0, &TrainParams::default())
            .unwrap();
        write_product_quantizer(&dir, &q).unwrap();
        let back = read_product_quantizer(&dir, 1.0, 2.0).unwrap();
        let g = TimeGrid::new(1.0, 6).unwrap();
        let path = PathSample::from_fn(g, |t| t * t - 0.4).unwrap();
        let (qa, ia) = q.quantize_path(&path).unwrap();
        let (qb, ib) = back.quantize_path(&path).unwrap();
        assert_eq!(qa.values(), qb.values());
        assert_eq!(ia, ib);
    }

    #[test]
    fn poisson_quantizer_round_trip() {
        let dir = tmpdir("cppq");
        let streams = SeedStreams::new(42);
        let q = build_poisson_quantizer(
            1.0,
            1.0,
            1.0,
            1.0,
            64,
            Some(crate::procsim::JumpLaw::Uniform { lo: -1.0, hi: 1.0 }),
            &CppqParams { train_draws: 5_000, ..CppqParams::default() },
            &streams,
        )
        .unwrap();
        write_poisson_quantizer(&dir, &q).unwrap();
        let back = read_poisson_quantizer(&dir).unwrap();
        assert_eq!(back.budget(), q.budget());
        assert_eq!(back.budgets_split(), q.budgets_split());
        assert_eq!(back.time_books().len(), q.time_books().len());
        for (a, b) in back.time_books().iter().zip(q.time_books()) {
            assert_eq!(a.points(), b.points());
            assert_eq!(a.censor(), b.censor());
        }
        assert_eq!(back.jump_law(), q.jump_law());
    }

    #[test]
    fn manifest_lists_every_file() {
        let dir = tmpdir("manifest");
        let f1 = dir.join("a.csv");
        fs::write(&f1, "N,e\n1,0.5\n").unwrap();
        let f2 = dir.join("b.csv");
        fs::write(&f2, "h,phi\n0.5,0.7\n").unwrap();
        let manifest = write_manifest(&dir, "kind = \"test\"", &[f1, f2]).unwrap();
        let text = fs::read_to_string(manifest).unwrap();
        assert!(text.contains("a.csv"));
        assert!(text.contains("b.csv"));
        assert!(text.contains("config_sha256="));
    }
}
