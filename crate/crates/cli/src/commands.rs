//! `trace` and `phi`.

use std::io::Write;

use projflat_core::spray::scalar_pack;
use projflat_core::{GeodesicPath, Integrator, PathStatus, SprayRoute};
use serde::Serialize;

use crate::config::BundleConfig;
use crate::CliError;

/// Integrates one geodesic of the configured bundle.
pub fn trace(
    cfg: &BundleConfig,
    x0: &[f64],
    y0: &[f64],
    t_end: f64,
    steps: usize,
    route: SprayRoute,
) -> Result<GeodesicPath, CliError> {
    let n = cfg.n;
    if x0.len() != n || y0.len() != n {
        return Err(CliError::Usage(format!("x0 and y0 need {n} components")));
    }
    let built = cfg.build()?;
    if !built.bundle.space().is_admissible(x0) {
        return Err(CliError::Usage("x0 is outside the admissible region".into()));
    }
    Integrator::new(route)
        .integrate(&built.bundle, x0, y0, t_end, steps)
        .map_err(|e| CliError::Usage(format!("initial data rejected: {e}")))
}

/// Writes `t,x1..xn,v1..vn` rows followed by `#` summary lines.
pub fn write_trace<W: Write>(path: &GeodesicPath, out: W) -> Result<(), CliError> {
    let n = path.samples.first().map_or(0, |s| s.x.len());
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=n).map(|i| format!("x{i}")))
        .chain((1..=n).map(|i| format!("v{i}")))
        .collect();
    w.write_record(&header)?;
    for s in &path.samples {
        let row = std::iter::once(s.t).chain(s.x.iter().copied()).chain(s.v.iter().copied());
        w.write_record(row.map(|v| v.to_string()))?;
    }
    let mut out = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    match &path.status {
        PathStatus::Complete => writeln!(out, "# status=complete")?,
        PathStatus::LeftDomain { t } => writeln!(out, "# status=left_domain t={t}")?,
        PathStatus::Failed { t, error } => writeln!(out, "# status=failed t={t} error={error}")?,
    }
    match path.straightness() {
        Ok(v) => writeln!(out, "# straightness={v:e}")?,
        Err(e) => writeln!(out, "# straightness=unavailable ({e})")?,
    }
    Ok(())
}

/// `φ` jet, scalar pack and PDE residual at one `(b², s)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiReport {
    pub b2: f64,
    pub s: f64,
    pub phi: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub phi12: f64,
    pub phi22: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "Theta")]
    pub theta: f64,
    #[serde(rename = "Psi")]
    pub psi: f64,
    #[serde(rename = "Pi")]
    pub pi: f64,
    #[serde(rename = "Omega")]
    pub omega: f64,
    pub pde_residual: f64,
}

/// Evaluates the configured `φ` at `(b², s)`. Points outside `|s| ≤ b`, outside the
/// coupling's range or where `φ` is not convex are usage errors.
pub fn phi(cfg: &BundleConfig, b2: f64, s: f64) -> Result<PhiReport, CliError> {
    let built = cfg.build()?;
    let fam = &built.family;
    let range = |e| CliError::Usage(format!("(b2, s) = ({b2}, {s}) rejected: {e}"));
    let j = fam.phi_jet(b2, s).map_err(range)?;
    let c = fam.c().value(b2).map_err(range)?;
    let p = scalar_pack(&j).map_err(range)?;
    Ok(PhiReport {
        b2,
        s,
        phi: j.phi,
        phi1: j.phi1,
        phi2: j.phi2,
        phi12: j.phi12,
        phi22: j.phi22,
        q: p.q,
        r: p.r,
        theta: p.theta,
        psi: p.psi,
        pi: p.pi,
        omega: p.omega,
        pde_residual: j.pde_residual(c),
    })
}

/// Parses `"0.1,0.2,-0.3"`.
pub fn parse_vector(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()
        .and_then(|v| if v.iter().all(|x| x.is_finite()) { Ok(v) } else { Err("components must be finite".into()) })
}

/// Parses a spray route name.
pub fn parse_route(text: &str) -> Result<SprayRoute, String> {
    [SprayRoute::Definitional, SprayRoute::General, SprayRoute::ClosedForm]
        .into_iter()
        .find(|r| r.name() == text)
        .ok_or_else(|| format!("unknown route {text:?} (definitional, general, closed_form)"))
}
