use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use num_bigint::BigInt;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use mapclt::asymptotics::{
    estimate_growth, gw_condition_check, ks_normality, moment_constants, saddle_vs_contour, sandwich_check,
    scaled_f64, SaddleInput, ScaledCoefficients, MIN_LEN,
};
use mapclt::distribution::{degree_stats, exact_distribution, labeled_config_counts, DegreeStats, DistributionTable};
use mapclt::enumerate::{generate, Limits};
use mapclt::format::{maps_to_text, parse_map, parse_maps, to_text};
use mapclt::itypes::{enumerate_intersection_types_with, TypeCatalog};
use mapclt::pattern::{find_occurrences, occurrences_intersect, Pattern};
use mapclt::poly::FLOAT_SCALE;
use mapclt::series::Series3;
use mapclt::solver::{build_pattern_equation, solve_float, solve_pattern_equation, PatternEquation};
use mapclt::{Error, MapClass};

use crate::report::{conventions, estimated, exact, write_json, Report, Source, SERIES_SCHEMA, TYPES_SCHEMA};

const CACHE_VERSION: u32 = 1;

/// Two-point laws are skipped by the normality check: their distance to the
/// normal depends only on the split and says nothing about the trend.
pub const MIN_KS_ATOMS: usize = 3;

/// Shared settings.
pub struct Env {
    pub limits: Limits,
    pub cache: Option<PathBuf>,
}

impl Env {
    fn cached<T, F>(&self, name: &str, compute: F) -> Result<T>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> mapclt::Result<T>,
    {
        let Some(dir) = &self.cache else { return Ok(compute()?) };
        let path = dir.join(format!("{name}.json"));
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(doc) = serde_json::from_str::<Value>(&text) {
                if doc["version"] == json!(CACHE_VERSION) {
                    if let Ok(v) = serde_json::from_value(doc["data"].clone()) {
                        return Ok(v);
                    }
                }
            }
            eprintln!("warning: ignoring unreadable cache entry {}", path.display());
        }
        let v = compute()?;
        std::fs::create_dir_all(dir).with_context(|| format!("creating cache dir {}", dir.display()))?;
        let doc = json!({ "version": CACHE_VERSION, "data": v });
        std::fs::write(&path, serde_json::to_string(&doc)?).with_context(|| format!("writing {}", path.display()))?;
        Ok(v)
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Usage(format!("cannot read {}: {e}", path.display())).into())
}

pub fn load_pattern(path: &Path) -> Result<Pattern> {
    let map = parse_map(&read_text(path)?)?;
    Ok(Pattern::new(map)?)
}

/// FNV-1a over the canonical rotation; names cache entries per pattern.
fn pattern_key(p: &Pattern) -> String {
    let canon = p.map().canonical();
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &d in canon.sigma_slice() {
        for b in d.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    format!("{h:016x}")
}

fn ratio(num: &BigInt, den: &BigInt, n: usize) -> f64 {
    scaled_f64(num, n, FLOAT_SCALE) / scaled_f64(den, n, FLOAT_SCALE)
}

pub fn enumerate(env: &Env, n: usize, cls: MapClass, maps_out: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let mut rep = Report::new("enumerate", json!({ "n": n, "class": cls.name() }));
    let stats: DegreeStats =
        env.cached(&format!("degrees-{}-{n}", cls.name()), || degree_stats(n, cls, &env.limits))?;
    rep.set("count", exact(stats.total(), Source::Enumeration));
    rep.set("max_degree_histogram", exact(&stats.histogram, Source::Enumeration));
    rep.set("mean_max_degree", exact(stats.mean(), Source::Enumeration));
    if let Some(path) = maps_out {
        let run = generate(n, cls, &env.limits)?;
        std::fs::write(path, maps_to_text(&run.maps)).with_context(|| format!("writing {}", path.display()))?;
    }
    rep.emit(out)
}

pub fn occurrences(pattern: &Path, host: &Path, out: Option<&Path>) -> Result<()> {
    let p = load_pattern(pattern)?;
    let hosts = parse_maps(&read_text(host)?)?;
    let mut rep = Report::new(
        "occurrences",
        json!({ "pattern": pattern.display().to_string(), "host": host.display().to_string() }),
    );
    let mut rows = Vec::new();
    for (i, h) in hosts.iter().enumerate() {
        let occ = find_occurrences(h, &p);
        let mut pairs = 0u64;
        for a in 0..occ.len() {
            for b in a + 1..occ.len() {
                if occurrences_intersect(h, &occ[a], &occ[b])? {
                    pairs += 1;
                }
            }
        }
        let list: Vec<Value> = occ
            .iter()
            .map(|o| json!({ "darts": o.darts, "interior_faces": o.interior_faces, "embedding": o.embedding }))
            .collect();
        rows.push(json!({
            "host": i,
            "edges": h.edges(),
            "count": exact(occ.len(), Source::Enumeration),
            "intersecting_pairs": exact(pairs, Source::Enumeration),
            "occurrences": list,
        }));
    }
    rep.set("pattern_edges", json!(p.edges()));
    rep.set("hosts", json!(rows));
    rep.emit(out)
}

fn catalog(env: &Env, p: &Pattern, cls: MapClass, max_edges: usize) -> Result<TypeCatalog> {
    Ok(enumerate_intersection_types_with(p, cls, max_edges, &env.limits)?)
}

pub fn itypes(env: &Env, pattern: &Path, cls: MapClass, max_edges: Option<usize>, out: Option<&Path>) -> Result<()> {
    let p = load_pattern(pattern)?;
    let max_edges = max_edges.unwrap_or(2 * p.edges());
    let cat = catalog(env, &p, cls, max_edges)?;
    if !cat.is_complete() {
        eprintln!("warning: max-edges {max_edges} is below {}; the catalog may be truncated", 2 * p.edges());
    }
    let families = cat.to_json();
    let corrections: Vec<Value> = cat
        .pinch_corrections
        .iter()
        .map(|t| json!({ "r_i": t.rotations, "e_i": t.edges, "v_i": t.boundary_len, "deep_faces": t.deep_faces }))
        .collect();
    let doc = json!({
        "schema": TYPES_SCHEMA,
        "class": cls.name(),
        "pattern": to_text(p.map()),
        "pattern_edges": p.edges(),
        "max_edges": max_edges,
        "complete": cat.is_complete(),
        "conventions": conventions(),
        "cardinality": families.as_array().map_or(0, Vec::len),
        "rooted_types": cat.types.len(),
        "families": families,
        "pinch_corrections": corrections,
    });
    write_json(&doc, out)
}

fn pattern_equation(env: &Env, p: &Pattern, cls: MapClass) -> Result<PatternEquation> {
    let cat = catalog(env, p, cls, 2 * p.edges())?;
    Ok(build_pattern_equation(p, &cat.type_shapes(), &cat.correction_shapes(), cls)?)
}

pub fn solve(env: &Env, cls: MapClass, pattern: Option<&Path>, nz: usize, nx: usize, out: Option<&Path>) -> Result<()> {
    let mut warnings = Vec::new();
    let (eq, pattern_text, exact_layers) = match pattern {
        Some(path) => {
            let p = load_pattern(path)?;
            let eq = pattern_equation(env, &p, cls)?;
            let layers = if eq.pairwise_exact() { nx.min(2) } else { 0 };
            if nx > layers {
                warnings.push(format!("x-layers above x^{layers} are not exact for this pattern"));
            }
            (eq, Some(to_text(p.map())), layers)
        }
        None => (PatternEquation::plain(cls), None, nx),
    };
    let s = solve_pattern_equation(&eq, nz, nx)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let mut doc = s.to_json();
    let obj = doc.as_object_mut().expect("series json is an object");
    obj.insert("schema".into(), json!(SERIES_SCHEMA));
    obj.insert("pattern".into(), json!(pattern_text));
    obj.insert("kind".into(), json!("exact"));
    obj.insert("exact_x_layers".into(), json!(exact_layers));
    obj.insert("conventions".into(), conventions());
    obj.insert("warnings".into(), json!(warnings));
    write_json(&doc, out)
}

/// Exact per-n mean and variance from the x-layers of a solved series.
fn series_moments(s: &Series3, upto: usize) -> Vec<(usize, Option<f64>, Option<f64>)> {
    let a = s.counts_at_u1(0);
    let b = (s.nx() >= 1).then(|| s.counts_at_u1(1));
    let c = (s.nx() >= 2).then(|| s.counts_at_u1(2));
    (0..=upto.min(s.nz()))
        .filter(|&n| a[n] > BigInt::from(0))
        .map(|n| {
            let mean = b.as_ref().map(|b| ratio(&b[n], &a[n], n));
            let var = match (mean, &c) {
                (Some(m), Some(c)) => Some(2.0 * ratio(&c[n], &a[n], n) + m - m * m),
                _ => None,
            };
            (n, mean, var)
        })
        .collect()
}

fn growth_section(rep: &mut Report, sc: &ScaledCoefficients, src: Source) -> Option<f64> {
    match estimate_growth(sc) {
        Ok(g) => {
            let mc = moment_constants(&g);
            rep.set(
                "growth",
                json!({
                    "rho0": estimated(g.rho0, src),
                    "rho1": estimated(g.rho1, src),
                    "rho2": estimated(g.rho2, src),
                    "c_log_deriv": estimated(g.c_log_deriv, src),
                    "residuals": estimated(g.diagnostics.residuals, src),
                    "residuals_shrinking": g.diagnostics.residuals_shrinking,
                    "alpha_free": estimated(g.diagnostics.alpha_free, src),
                    "coefficients_used": g.diagnostics.used,
                }),
            );
            rep.set(
                "moment_constants",
                json!({ "c1": estimated(mc.c1, src), "c2_squared": estimated(mc.c2_squared, src) }),
            );
            Some(mc.c1)
        }
        Err(e) => {
            rep.warn(format!("no growth estimate: {e}"));
            None
        }
    }
}

pub fn moments(series: &Path, out: Option<&Path>) -> Result<()> {
    let doc: Value = serde_json::from_str(&read_text(series)?)
        .map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })?;
    let s = Series3::from_json(&doc)?;
    let mut rep = Report::new(
        "moments",
        json!({ "series": series.display().to_string(), "Nz": s.nz(), "Nx": s.nx(), "class": s.cls.map(|c| c.name()) }),
    );
    let exact_layers = doc["exact_x_layers"].as_u64().map_or(s.nx(), |v| v as usize);
    if exact_layers < 2 {
        rep.warn("the series has fewer than two exact x-layers; moments are partial");
    }
    let rows: Vec<Value> = series_moments(&s, s.nz())
        .into_iter()
        .map(|(n, mean, var)| {
            json!({
                "n": n,
                "mean": mean.filter(|_| exact_layers >= 1).map(|v| exact(v, Source::Series)),
                "variance": var.filter(|_| exact_layers >= 2).map(|v| exact(v, Source::Series)),
            })
        })
        .collect();
    rep.set("per_n", json!(rows));
    if s.nz() + 1 < MIN_LEN {
        rep.warn(format!("growth constants need at least {MIN_LEN} coefficients; the series has {}", s.nz() + 1));
    } else {
        growth_section(&mut rep, &ScaledCoefficients::from_series(&s, FLOAT_SCALE), Source::Series);
    }
    rep.emit(out)
}

pub struct CltArgs<'a> {
    pub pattern: &'a Path,
    pub cls: MapClass,
    pub nmax: usize,
    pub nz: usize,
    pub kmax: usize,
    pub sandwich_nmax: usize,
    pub out: Option<&'a Path>,
    pub csv: Option<&'a Path>,
}

pub fn clt(env: &Env, a: &CltArgs) -> Result<()> {
    let p = load_pattern(a.pattern)?;
    let key = pattern_key(&p);
    let cls = a.cls;
    let mut rep = Report::new(
        "clt",
        json!({
            "pattern": a.pattern.display().to_string(),
            "class": cls.name(),
            "nmax": a.nmax,
            "Nz": a.nz,
            "kmax": a.kmax,
            "sandwich_nmax": a.sandwich_nmax,
        }),
    );
    for n in 0..=a.nmax {
        env.limits.check(n, cls)?;
    }
    let eq = pattern_equation(env, &p, cls)?;
    if !eq.pairwise_exact() {
        rep.warn("the pattern equation is not exact in x^1 and x^2; series moments are omitted");
    }

    let dists: Vec<DistributionTable> = (0..=a.nmax)
        .map(|n| env.cached(&format!("dist-{}-{key}-{n}", cls.name()), || exact_distribution(n, cls, &p, &env.limits)))
        .collect::<Result<_>>()?;
    let series = if eq.pairwise_exact() { Some(solve_pattern_equation(&eq, a.nmax, 2)?) } else { None };
    let smom = series.as_ref().map(|s| series_moments(s, a.nmax)).unwrap_or_default();

    let mut ks_rows = Vec::new();
    let mut rows = Vec::new();
    let mut csv_rows = Vec::new();
    for d in &dists {
        let atoms = d.histogram.iter().filter(|&&m| m > 0).count();
        let ks = if atoms >= MIN_KS_ATOMS { ks_normality(d).ok() } else { None };
        if let Some(v) = ks {
            ks_rows.push(json!({ "n": d.n, "ks": exact(v, Source::Enumeration) }));
        }
        let sm = smom.iter().find(|r| r.0 == d.n);
        let fm: Vec<Value> = (1..=a.kmax).map(|k| exact(d.factorial_moment(k), Source::Enumeration)).collect();
        rows.push(json!({
            "n": d.n,
            "maps": exact(d.total(), Source::Enumeration),
            "histogram": exact(&d.histogram, Source::Enumeration),
            "mean": exact(d.mean(), Source::Enumeration),
            "variance": exact(d.variance(), Source::Enumeration),
            "factorial_moments": fm,
            "series_mean": sm.and_then(|r| r.1).map(|v| exact(v, Source::Series)),
            "series_variance": sm.and_then(|r| r.2).map(|v| exact(v, Source::Series)),
        }));
        csv_rows.push((d.n, d.mean(), d.variance(), ks));
    }
    rep.set("per_n", json!(rows));
    if ks_rows.is_empty() {
        rep.warn(format!(
            "no distribution for n <= {} has {MIN_KS_ATOMS} or more atoms; the KS section is empty",
            a.nmax
        ));
    }
    let ks_values: Vec<f64> = ks_rows.iter().filter_map(|r| r["ks"]["value"].as_f64()).collect();
    let ks_decreasing = ks_values.len() >= 2 && ks_values.windows(2).all(|w| w[1] < w[0]);
    rep.set("ks", json!({ "rows": ks_rows, "strictly_decreasing": ks_decreasing }));

    let gw: Vec<Value> = gw_condition_check(&dists, a.kmax)
        .into_iter()
        .map(|r| {
            json!({
                "n": r.n,
                "k": r.k,
                "ratio": r.ratio.map(|v| exact(v, Source::Enumeration)),
                "ratio_k_squared": r.ratio_k_squared.map(|v| exact(v, Source::Enumeration)),
                "degenerate": r.degenerate,
            })
        })
        .collect();
    rep.set("gw_condition", json!(gw));

    let upto = a.nmax.min(a.sandwich_nmax);
    let mut counts = Vec::new();
    let mut stats = Vec::new();
    for d in dists.iter().take(upto + 1) {
        for k in 0..=a.kmax {
            counts.push(env.cached(&format!("labeled-{}-{key}-{}-{k}", cls.name(), d.n), || {
                labeled_config_counts(d.n, k, cls, &p, &env.limits)
            })?);
            stats.push((d.mean(), d.total()));
        }
    }
    let sandwich: Vec<Value> = sandwich_check(&counts, &stats)
        .into_iter()
        .map(|r| {
            json!({
                "n": r.n,
                "k": r.k,
                "m_circ_cross": exact(r.m_circ_cross, Source::Enumeration),
                "m_circ": exact(r.m_circ, Source::Enumeration),
                "upper": exact(r.upper, Source::Enumeration),
                "left_holds": r.left_holds,
                "left_equal": r.left_equal,
                "residual": exact(r.residual, Source::Enumeration),
            })
        })
        .collect();
    rep.set("sandwich", json!(sandwich));

    if a.nz + 1 < MIN_LEN {
        rep.warn(format!("Nz = {} is too small for growth constants (need {})", a.nz, MIN_LEN - 1));
    } else if eq.pairwise_exact() {
        let sc = solve_float(&eq, a.nz, 2)?;
        if let Some(c1) = growth_section(&mut rep, &sc, Source::Asymptotic) {
            let gaps: Vec<Value> = dists
                .iter()
                .filter(|d| d.n > 0 && d.mean() > 0.0)
                .map(|d| json!({ "n": d.n, "gap": estimated((d.mean() / d.n as f64 - c1).abs(), Source::Asymptotic) }))
                .collect();
            rep.set("mean_per_edge_gap", json!(gaps));
        }
    }

    if let Some(path) = a.csv {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(["n", "mean", "variance", "ks"])?;
        for (n, mean, var, ks) in csv_rows {
            w.write_record([n.to_string(), mean.to_string(), var.to_string(), ks.map_or(String::new(), |v| v.to_string())])?;
        }
        w.flush()?;
    }
    rep.emit(a.out)
}

fn parse_coeffs(s: &str, what: &str) -> Result<Vec<f64>> {
    let v: std::result::Result<Vec<f64>, _> =
        s.split([',', ' ']).filter(|t| !t.is_empty()).map(str::parse::<f64>).collect();
    match v {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(Error::Usage(format!("--{what} expects comma-separated numbers, got `{s}`")).into()),
    }
}

pub fn saddle_check(n: u64, k: u64, f: &str, g: &str, out: Option<&Path>) -> Result<()> {
    let (fc, gc) = (parse_coeffs(f, "f")?, parse_coeffs(g, "g")?);
    let mut rep = Report::new("saddle-check", json!({ "n": n, "k": k, "f": fc, "g": gc }));
    if SaddleInput::from_taylor(n, k, &fc, &gc).outside_central_regime() {
        rep.warn("k / sqrt(n) lies outside [0.1, 10]");
    }
    let (formula, oracle, rel) = saddle_vs_contour(&fc, &gc, n, k)?;
    rep.set("log_formula", estimated(formula, Source::Asymptotic));
    rep.set("log_oracle", estimated(oracle, Source::Quadrature));
    rep.set("relative_error", estimated(rel, Source::Quadrature));
    rep.emit(out)
}
