//! Norms, conservation and positivity monitors, the diagnostics CSV and the
//! continuous-dependence probe.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::boundary::{dehomogenize, BoundaryVar, HomogenizationFactors};
use crate::error::{Error, Result};
use crate::fields::{negative_part, ScalarField, State};
use crate::solver::{Model, Observer, StepInfo};
use crate::spectral::Spectral;

/// `(sum_{|alpha| <= k} ||d^alpha f||^2)^{1/2}` for `k <= 2`.
///
/// Horizontal derivatives are spectral; vertical ones use [`Spectral::dz_free`],
/// so fields without zero wall slope are handled. Mixed derivatives count once
/// per multi-index.
pub fn sobolev_norm(sp: &Spectral, f: &ScalarField, k: usize) -> Result<f64> {
    Ok(sobolev_norms(sp, f, k)?[k])
}

/// `[H^0, H^1, ..., H^k]` norms sharing the derivative work.
pub fn sobolev_norms(sp: &Spectral, f: &ScalarField, k: usize) -> Result<Vec<f64>> {
    if k > 2 {
        return Err(Error::InvalidArgument(format!("sobolev order {k} unsupported (max 2)")));
    }
    let mut acc = vec![f.dot(f)];
    if k >= 1 {
        let fx = sp.dx(f);
        let fy = sp.dy(f);
        let fz = sp.dz_free(f);
        acc.push(fx.dot(&fx) + fy.dot(&fy) + fz.dot(&fz));
        if k == 2 {
            let second = [
                sp.dx(&fx),
                sp.dy(&fy),
                sp.dz_free(&fz),
                sp.dy(&fx),
                sp.dx(&fz),
                sp.dy(&fz),
            ];
            acc.push(second.iter().map(|d| d.dot(d)).sum());
        }
    }
    let mut out = Vec::with_capacity(acc.len());
    let mut run = 0.0;
    for a in acc {
        run += a;
        out.push(run.max(0.0).sqrt());
    }
    Ok(out)
}

/// Physical `T, q_v, q_c, q_r` of a homogenized state.
pub fn physical_fields(state: &State, factors: &HomogenizationFactors) -> Result<[ScalarField; 4]> {
    Ok([
        dehomogenize(&state.frak_t, factors.get(BoundaryVar::T))?,
        dehomogenize(&state.frak_q[0], factors.get(BoundaryVar::V))?,
        dehomogenize(&state.frak_q[1], factors.get(BoundaryVar::C))?,
        dehomogenize(&state.frak_q[2], factors.get(BoundaryVar::R))?,
    ])
}

/// `(||T^-||, ||q_v^-||, ||q_c^-||, ||q_r^-||)` of the physical variables.
pub fn negativity_monitor(state: &State, factors: &HomogenizationFactors) -> Result<[f64; 4]> {
    let p = physical_fields(state, factors)?;
    Ok([0, 1, 2, 3].map(|i| negative_part(&p[i]).l2_norm()))
}

const NORMED: [&str; 7] = ["u", "T", "qv", "qc", "qr", "sqrt_rho", "log_rho"];

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRow {
    pub time: f64,
    pub step: usize,
    /// `[L2, H1, H2]` for `u, T, q_v, q_c, q_r, rho_d^{1/2}, log rho_d`.
    pub norms: [[f64; 3]; 7],
    pub dry_mass: f64,
    pub total_water: f64,
    /// minima of `T, q_v, q_c, q_r, rho_d`
    pub mins: [f64; 5],
    /// negative-part norms of `T, q_v, q_c, q_r`
    pub negative: [f64; 4],
    pub picard_iterations: usize,
    pub picard_ratio: Option<f64>,
}

impl DiagnosticsRow {
    pub fn header() -> Vec<String> {
        let mut h = vec!["time".to_string(), "step".to_string()];
        for n in NORMED {
            for k in ["l2", "h1", "h2"] {
                h.push(format!("{n}_{k}"));
            }
        }
        h.extend(["dry_mass", "total_water"].map(String::from));
        h.extend(["min_T", "min_qv", "min_qc", "min_qr", "min_rho"].map(String::from));
        h.extend(["neg_T", "neg_qv", "neg_qc", "neg_qr"].map(String::from));
        h.extend(["picard_iterations", "picard_ratio"].map(String::from));
        h
    }

    /// Values in header order; an unmeasured Picard ratio is an empty field.
    pub fn record(&self) -> Vec<String> {
        let f = |v: f64| format!("{v:e}");
        let mut r = vec![f(self.time), self.step.to_string()];
        for n in &self.norms {
            r.extend(n.iter().map(|&v| f(v)));
        }
        r.push(f(self.dry_mass));
        r.push(f(self.total_water));
        r.extend(self.mins.iter().map(|&v| f(v)));
        r.extend(self.negative.iter().map(|&v| f(v)));
        r.push(self.picard_iterations.to_string());
        r.push(self.picard_ratio.map(f).unwrap_or_default());
        r
    }

    pub fn is_finite(&self) -> bool {
        self.norms.iter().flatten().all(|v| v.is_finite())
            && self.dry_mass.is_finite()
            && self.total_water.is_finite()
            && self.mins.iter().all(|v| v.is_finite())
            && self.negative.iter().all(|v| v.is_finite())
    }
}

fn tri(n: Vec<f64>) -> [f64; 3] {
    [n[0], n[1], n[2]]
}

/// Evaluate the full diagnostics row of `state`.
pub fn compute_row(model: &Model, state: &State, step: usize, info: Option<&StepInfo>) -> Result<DiagnosticsRow> {
    let sp = &model.sp;
    let factors = model.factors(state.time)?;
    let phys = physical_fields(state, &factors)?;
    let rho = crate::fields::rho_d(state)?;
    let mut u = [0.0; 3];
    for c in state.u.components() {
        let n = sobolev_norms(sp, c, 2)?;
        for k in 0..3 {
            u[k] += n[k] * n[k];
        }
    }
    let mut norms = [u.map(f64::sqrt); 7];
    for i in 0..4 {
        norms[i + 1] = tri(sobolev_norms(sp, &phys[i], 2)?);
    }
    norms[5] = tri(sobolev_norms(sp, &rho.map(f64::sqrt), 2)?);
    norms[6] = tri(sobolev_norms(sp, &state.log_rho_d, 2)?);
    let water = &(&phys[1] + &phys[2]) + &phys[3];
    Ok(DiagnosticsRow {
        time: state.time,
        step,
        norms,
        dry_mass: rho.integral(),
        total_water: (&rho * &water).integral(),
        mins: [phys[0].min(), phys[1].min(), phys[2].min(), phys[3].min(), rho.min()],
        negative: [0, 1, 2, 3].map(|i| negative_part(&phys[i]).l2_norm()),
        picard_iterations: info.map_or(0, |i| i.picard_iterations),
        picard_ratio: info.and_then(|i| i.picard_ratio),
    })
}

/// Appends rows to a diagnostics CSV; the header is written with the first row.
pub struct CsvEmitter<W: Write> {
    writer: csv::Writer<W>,
    header_written: bool,
}

impl CsvEmitter<File> {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(CsvEmitter::new(File::create(path)?))
    }
}

impl<W: Write> CsvEmitter<W> {
    pub fn new(w: W) -> Self {
        CsvEmitter {
            writer: csv::WriterBuilder::new().has_headers(false).from_writer(w),
            header_written: false,
        }
    }

    /// Emitter for a file that already holds the header.
    pub fn continuing(w: W) -> Self {
        CsvEmitter {
            header_written: true,
            ..CsvEmitter::new(w)
        }
    }

    pub fn emit(&mut self, row: &DiagnosticsRow) -> Result<()> {
        if !self.header_written {
            self.writer.write_record(DiagnosticsRow::header())?;
            self.header_written = true;
        }
        self.writer.write_record(row.record())?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.writer.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> Result<W> {
        self.writer
            .into_inner()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }
}

/// Observer that writes one diagnostics row per step and, optionally, the
/// per-step wall-clock to a separate timing file.
pub struct DiagnosticsObserver<W: Write> {
    pub emitter: CsvEmitter<W>,
    pub timing: Option<csv::Writer<File>>,
    pub rows: Vec<DiagnosticsRow>,
    pub keep_rows: bool,
}

impl<W: Write> DiagnosticsObserver<W> {
    pub fn new(emitter: CsvEmitter<W>) -> Self {
        DiagnosticsObserver {
            emitter,
            timing: None,
            rows: Vec::new(),
            keep_rows: false,
        }
    }

    pub fn with_timing(mut self, path: &Path) -> Result<Self> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["step", "time", "wall_seconds", "retries"])?;
        self.timing = Some(w);
        Ok(self)
    }

    fn push(&mut self, row: DiagnosticsRow) -> Result<()> {
        if !row.is_finite() {
            return Err(Error::NonFinite(format!("diagnostics at step {}", row.step)));
        }
        self.emitter.emit(&row)?;
        if self.keep_rows {
            self.rows.push(row);
        }
        Ok(())
    }

    pub fn finish(&mut self) -> Result<()> {
        self.emitter.flush()?;
        if let Some(t) = &mut self.timing {
            t.flush()?;
        }
        Ok(())
    }
}

impl<W: Write> Observer for DiagnosticsObserver<W> {
    fn initial(&mut self, model: &Model, state: &State, step: usize) -> Result<()> {
        let row = compute_row(model, state, step, None)?;
        self.push(row)
    }

    fn step(&mut self, model: &Model, info: &StepInfo, state: &State) -> Result<()> {
        let row = compute_row(model, state, info.step, Some(info))?;
        self.push(row)?;
        if let Some(t) = &mut self.timing {
            t.write_record([
                info.step.to_string(),
                format!("{:e}", info.time),
                format!("{:e}", info.wall_seconds),
                info.retries.to_string(),
            ])?;
        }
        Ok(())
    }
}

/// Difference measurements between two runs.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthReport {
    pub times: Vec<f64>,
    /// `||delta rho_d||_2`
    pub d_rho: Vec<f64>,
    /// `||(delta u, delta frak_T, delta frak_q)||_2`
    pub d_state: Vec<f64>,
    /// running `int_0^t ||delta(u, frak_T, frak_q)||_{H^1}^2 dt`
    pub cumulative_h1: Vec<f64>,
    /// initial total difference `||delta_0||`
    pub delta0: f64,
    /// fitted log-growth rate `C` of `d_rho + d_state`
    pub growth_rate: f64,
    /// fitted prefactor `c`
    pub prefactor: f64,
    /// whether every sample lies below `ENVELOPE_HEADROOM c e^{Ct} ||delta_0||`
    pub within_envelope: bool,
}

/// Slack factor applied to the fitted envelope.
pub const ENVELOPE_HEADROOM: f64 = 10.0;

fn state_difference(sp: &Spectral, a: &State, b: &State) -> Result<(f64, f64, f64)> {
    a.grid().check(&b.grid())?;
    let d_rho = (&a.log_rho_d.map(f64::exp) - &b.log_rho_d.map(f64::exp)).l2_norm();
    let pairs = [
        (&a.u.v1, &b.u.v1),
        (&a.u.v2, &b.u.v2),
        (&a.u.w, &b.u.w),
        (&a.frak_t, &b.frak_t),
        (&a.frak_q[0], &b.frak_q[0]),
        (&a.frak_q[1], &b.frak_q[1]),
        (&a.frak_q[2], &b.frak_q[2]),
    ];
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    for (x, y) in pairs {
        let d = x - y;
        let n = sobolev_norms(sp, &d, 1)?;
        l2 += n[0] * n[0];
        h1 += n[1] * n[1];
    }
    Ok((d_rho, l2.sqrt(), h1))
}

/// Compare two trajectories sampled at the same times.
pub fn stability_probe(sp: &Spectral, run_a: &[State], run_b: &[State]) -> Result<GrowthReport> {
    if run_a.len() != run_b.len() || run_a.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "trajectories differ in length ({} vs {})",
            run_a.len(),
            run_b.len()
        )));
    }
    let mut rep = GrowthReport {
        times: Vec::new(),
        d_rho: Vec::new(),
        d_state: Vec::new(),
        cumulative_h1: Vec::new(),
        delta0: 0.0,
        growth_rate: 0.0,
        prefactor: 0.0,
        within_envelope: true,
    };
    let mut cum = 0.0;
    let mut last_t = run_a[0].time;
    for (a, b) in run_a.iter().zip(run_b) {
        if a.time != b.time {
            return Err(Error::InvalidArgument(format!(
                "trajectories sampled at different times ({} vs {})",
                a.time, b.time
            )));
        }
        let (dr, ds, h1) = state_difference(sp, a, b)?;
        cum += h1 * (a.time - last_t);
        last_t = a.time;
        rep.times.push(a.time);
        rep.d_rho.push(dr);
        rep.d_state.push(ds);
        rep.cumulative_h1.push(cum);
    }
    let total: Vec<f64> = rep.d_rho.iter().zip(&rep.d_state).map(|(a, b)| a + b).collect();
    rep.delta0 = total[0];
    if rep.delta0 == 0.0 {
        rep.within_envelope = total.iter().all(|&d| d == 0.0);
        return Ok(rep);
    }
    // least squares of log(d / delta0) = log c + C t over nonzero samples
    let pts: Vec<(f64, f64)> = rep
        .times
        .iter()
        .zip(&total)
        .filter(|(_, &d)| d > 0.0)
        .map(|(&t, &d)| (t, (d / rep.delta0).ln()))
        .collect();
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    rep.growth_rate = slope;
    rep.prefactor = (ml - slope * mt).exp();
    rep.within_envelope = rep.growth_rate.is_finite()
        && rep
            .times
            .iter()
            .zip(&total)
            .all(|(&t, &d)| d <= ENVELOPE_HEADROOM * rep.prefactor * (rep.growth_rate * t).exp() * rep.delta0);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::make_grid;

    const PI: f64 = std::f64::consts::PI;

    #[test]
    fn constant_has_sqrt_volume_norm() {
        let g = make_grid(8, 8, 9).unwrap();
        let sp = Spectral::new(g);
        let f = ScalarField::constant(g, 1.0);
        let n = sobolev_norms(&sp, &f, 2).unwrap();
        for v in n {
            assert!((v - 2.0).abs() < 1e-10, "{v}");
        }
    }

    #[test]
    fn single_mode_h1() {
        let g = make_grid(16, 8, 9).unwrap();
        let sp = Spectral::new(g);
        let f = ScalarField::from_fn(g, |x, _, _| (PI * x).sin());
        let l2 = sobolev_norm(&sp, &f, 0).unwrap();
        let h1 = sobolev_norm(&sp, &f, 1).unwrap();
        assert!((h1 * h1 - l2 * l2 * (1.0 + PI * PI)).abs() < 1e-10);
    }

    #[test]
    fn order_three_rejected() {
        let g = make_grid(4, 4, 5).unwrap();
        let sp = Spectral::new(g);
        assert!(sobolev_norm(&sp, &ScalarField::zeros(g), 3).is_err());
    }

    #[test]
    fn header_matches_record() {
        let row = DiagnosticsRow {
            time: 0.0,
            step: 0,
            norms: [[1.0; 3]; 7],
            dry_mass: 4.0,
            total_water: 0.0,
            mins: [1.0; 5],
            negative: [0.0; 4],
            picard_iterations: 0,
            picard_ratio: None,
        };
        assert_eq!(DiagnosticsRow::header().len(), row.record().len());
    }
}
