//! CSV writers and readers for every emitted artifact.
//!
//! Floats are written with 17 significant digits so a read-back reproduces
//! the in-memory value bit for bit.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::Result;
use crate::experiments::{
    SweepProtocol, SweepResult, TrappingHistogram, TrappingMember, ValidityRow,
};
use crate::phase_space::{Continuation, Contour, FixedPoint, SeparatrixCurve};
use crate::quantum::SpectrumResult;

pub const TRAJECTORY_HEADER: [&str; 9] = [
    "t", "re_a", "im_a", "re_b", "im_b", "pop_a", "pop_b", "s", "phi",
];
pub const SPECTRUM_HEADER: [&str; 6] = ["gamma", "branch_id", "energy", "s", "phi", "stability"];
pub const QUANTUM_HEADER: [&str; 5] = [
    "gamma",
    "level_index",
    "energy",
    "energy_per_particle",
    "n_particles",
];
pub const FIXED_POINT_HEADER: [&str; 6] = [
    "s",
    "phi",
    "energy",
    "stability",
    "hessian_eig_min",
    "hessian_eig_max",
];
pub const PORTRAIT_HEADER: [&str; 6] = ["curve_id", "kind", "energy", "point_index", "s", "phi"];
pub const SEPARATRIX_HEADER: [&str; 6] = [
    "saddle_id",
    "segment_id",
    "energy",
    "point_index",
    "s",
    "phi",
];
pub const LZ_HEADER: [&str; 9] = [
    "gamma_start",
    "gamma_end",
    "rate",
    "model",
    "transition_probability",
    "attractor",
    "attractor_gamma",
    "attractor_ambiguous",
    "pole_proximity",
];
pub const TRAPPING_HEADER: [&str; 7] = [
    "member",
    "s0",
    "phi0",
    "s_final",
    "phi_final",
    "attractor",
    "ambiguous",
];
pub const HISTOGRAM_HEADER: [&str; 3] = ["attractor", "count", "seed"];
pub const VALIDITY_HEADER: [&str; 5] = ["multiplier", "omega", "A", "max_error", "periods"];

/// `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a header row followed by pre-formatted records.
pub fn write_csv<W: Write, I>(out: W, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<File> {
    Ok(File::create(path)?)
}

/// Deserializes every record of a CSV file, checking the header first.
pub fn read_csv<T: DeserializeOwned>(path: &Path, header: &[&str]) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    let got: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if got != header {
        return Err(crate::error::Error::Config(format!(
            "{}: expected header {header:?}, found {got:?}",
            path.display()
        )));
    }
    Ok(r.deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub re_a: f64,
    pub im_a: f64,
    pub re_b: f64,
    pub im_b: f64,
    pub pop_a: f64,
    pub pop_b: f64,
    pub s: f64,
    pub phi: f64,
}

pub fn trajectory_rows(traj: &Trajectory) -> Vec<Vec<String>> {
    traj.samples
        .iter()
        .map(|x| {
            let pt = x.phase_point();
            [
                x.t,
                x.a.re,
                x.a.im,
                x.b.re,
                x.b.im,
                x.pop_a(),
                x.pop_b(),
                pt.s,
                pt.phi,
            ]
            .into_iter()
            .map(fmt_f64)
            .collect()
        })
        .collect()
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    write_csv(create(path)?, &TRAJECTORY_HEADER, trajectory_rows(traj))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub gamma: f64,
    pub branch_id: usize,
    pub energy: f64,
    pub s: f64,
    pub phi: f64,
    pub stability: String,
}

/// Continuation branches, ordered by `γ` then branch id.
pub fn write_spectrum(path: &Path, cont: &Continuation) -> Result<()> {
    let mut rows: Vec<(f64, usize, &FixedPoint)> = cont
        .branches
        .iter()
        .flat_map(|b| b.points.iter().map(move |(g, f)| (*g, b.id, f)))
        .collect();
    rows.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    write_csv(
        create(path)?,
        &SPECTRUM_HEADER,
        rows.into_iter().map(|(g, id, f)| {
            vec![
                fmt_f64(g),
                id.to_string(),
                fmt_f64(f.energy),
                fmt_f64(f.point.s),
                fmt_f64(f.point.phi),
                f.stability.as_str().to_owned(),
            ]
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumRow {
    pub gamma: f64,
    pub level_index: usize,
    pub energy: f64,
    pub energy_per_particle: f64,
    pub n_particles: usize,
}

pub fn write_quantum(
    path: &Path,
    scan: &[(f64, SpectrumResult)],
    n_particles: usize,
) -> Result<()> {
    let rows = scan.iter().flat_map(|(g, spec)| {
        spec.eigenvalues
            .iter()
            .zip(&spec.per_particle)
            .enumerate()
            .map(move |(k, (e, pp))| {
                vec![
                    fmt_f64(*g),
                    k.to_string(),
                    fmt_f64(*e),
                    fmt_f64(*pp),
                    n_particles.to_string(),
                ]
            })
    });
    write_csv(create(path)?, &QUANTUM_HEADER, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointRow {
    pub s: f64,
    pub phi: f64,
    pub energy: f64,
    pub stability: String,
    pub hessian_eig_min: f64,
    pub hessian_eig_max: f64,
}

pub fn write_fixed_points(path: &Path, points: &[FixedPoint]) -> Result<()> {
    write_csv(
        create(path)?,
        &FIXED_POINT_HEADER,
        points.iter().map(|f| {
            vec![
                fmt_f64(f.point.s),
                fmt_f64(f.point.phi),
                fmt_f64(f.energy),
                f.stability.as_str().to_owned(),
                fmt_f64(f.hessian_eigs[0].min(f.hessian_eigs[1])),
                fmt_f64(f.hessian_eigs[0].max(f.hessian_eigs[1])),
            ]
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortraitRow {
    pub curve_id: usize,
    /// `contour` or `separatrix`.
    pub kind: String,
    pub energy: f64,
    pub point_index: usize,
    pub s: f64,
    pub phi: f64,
}

/// Contour polylines followed by separatrix segments, each with its own curve id.
pub fn write_portrait(
    path: &Path,
    contours: &[Contour],
    separatrices: &[SeparatrixCurve],
) -> Result<()> {
    let mut rows = Vec::new();
    let mut id = 0;
    for c in contours {
        for (k, p) in c.points.iter().enumerate() {
            rows.push(vec![
                id.to_string(),
                "contour".into(),
                fmt_f64(c.energy),
                k.to_string(),
                fmt_f64(p.s),
                fmt_f64(p.phi),
            ]);
        }
        id += 1;
    }
    for sep in separatrices {
        for seg in &sep.segments {
            for (k, p) in seg.iter().enumerate() {
                rows.push(vec![
                    id.to_string(),
                    "separatrix".into(),
                    fmt_f64(sep.saddle.energy),
                    k.to_string(),
                    fmt_f64(p.s),
                    fmt_f64(p.phi),
                ]);
            }
            id += 1;
        }
    }
    write_csv(create(path)?, &PORTRAIT_HEADER, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatrixRow {
    pub saddle_id: usize,
    pub segment_id: usize,
    pub energy: f64,
    pub point_index: usize,
    pub s: f64,
    pub phi: f64,
}

pub fn write_separatrices(path: &Path, separatrices: &[SeparatrixCurve]) -> Result<()> {
    let mut rows = Vec::new();
    for (sid, sep) in separatrices.iter().enumerate() {
        for (gid, seg) in sep.segments.iter().enumerate() {
            for (k, p) in seg.iter().enumerate() {
                rows.push(vec![
                    sid.to_string(),
                    gid.to_string(),
                    fmt_f64(sep.saddle.energy),
                    k.to_string(),
                    fmt_f64(p.s),
                    fmt_f64(p.phi),
                ]);
            }
        }
    }
    write_csv(create(path)?, &SEPARATRIX_HEADER, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LzRow {
    pub gamma_start: f64,
    pub gamma_end: f64,
    pub rate: f64,
    pub model: String,
    pub transition_probability: f64,
    pub attractor: String,
    /// Empty when the degenerate window was never open.
    pub attractor_gamma: Option<f64>,
    pub attractor_ambiguous: bool,
    pub pole_proximity: bool,
}

pub fn write_lz_report(path: &Path, proto: &SweepProtocol, result: &SweepResult) -> Result<()> {
    let model = serde_plain_name(&proto.model);
    let row = vec![
        fmt_f64(proto.gamma_start),
        fmt_f64(proto.gamma_end),
        fmt_f64(proto.rate),
        model,
        fmt_f64(result.transition_probability),
        result.attractor.label().to_owned(),
        result.attractor_gamma.map(fmt_f64).unwrap_or_default(),
        result.attractor_ambiguous.to_string(),
        result.pole_proximity.to_string(),
    ];
    write_csv(create(path)?, &LZ_HEADER, [row])
}

fn serde_plain_name<T: Serialize>(v: &T) -> String {
    // unit enum variants serialize to a bare TOML string
    toml::Value::try_from(v)
        .ok()
        .and_then(|x| x.as_str().map(str::to_owned))
        .unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrappingRow {
    pub member: usize,
    pub s0: f64,
    pub phi0: f64,
    pub s_final: f64,
    pub phi_final: f64,
    pub attractor: String,
    pub ambiguous: bool,
}

pub fn write_trapping_members(path: &Path, members: &[TrappingMember]) -> Result<()> {
    write_csv(
        create(path)?,
        &TRAPPING_HEADER,
        members.iter().map(|m| {
            vec![
                m.index.to_string(),
                fmt_f64(m.initial.s),
                fmt_f64(m.initial.phi),
                fmt_f64(m.last.s),
                fmt_f64(m.last.phi),
                m.classification.attractor.label().to_owned(),
                m.classification.ambiguous.to_string(),
            ]
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub attractor: String,
    pub count: usize,
    pub seed: u64,
}

pub fn write_histogram(path: &Path, h: &TrappingHistogram) -> Result<()> {
    let rows = [("D_R", h.right), ("D_L", h.left), ("none", h.none)]
        .into_iter()
        .map(|(k, n)| vec![k.to_owned(), n.to_string(), h.seed.to_string()]);
    write_csv(create(path)?, &HISTOGRAM_HEADER, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityCsvRow {
    pub multiplier: f64,
    pub omega: f64,
    #[serde(rename = "A")]
    pub amplitude: f64,
    pub max_error: f64,
    pub periods: usize,
}

pub fn write_validity(path: &Path, rows: &[ValidityRow]) -> Result<()> {
    write_csv(
        create(path)?,
        &VALIDITY_HEADER,
        rows.iter().map(|r| {
            vec![
                fmt_f64(r.multiplier),
                fmt_f64(r.omega),
                fmt_f64(r.amplitude),
                fmt_f64(r.max_error),
                r.periods.to_string(),
            ]
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::AmplitudePair;
    use num_complex::Complex64;

    #[test]
    fn floats_round_trip_exactly() {
        for x in [
            0.1,
            -1.0 / 3.0,
            1e-300,
            6.02214076e23,
            std::f64::consts::PI,
            -0.0,
        ] {
            let back: f64 = fmt_f64(x).parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits());
        }
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn trajectory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trajectory.csv");
        let traj = Trajectory {
            samples: vec![
                AmplitudePair::new(Complex64::new(0.6, 0.0), Complex64::new(0.0, -0.8), 0.0),
                AmplitudePair::new(Complex64::new(0.1, 0.2), Complex64::new(0.3, 0.4), 0.125),
            ],
        };
        write_trajectory(&path, &traj).unwrap();
        let rows: Vec<TrajectoryRow> = read_csv(&path, &TRAJECTORY_HEADER).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].im_b, -0.8);
        assert_eq!(rows[1].t, 0.125);
        assert!(rows
            .iter()
            .all(|r| (0.0..std::f64::consts::TAU).contains(&r.phi)));
    }

    #[test]
    fn header_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(read_csv::<TrajectoryRow>(&path, &TRAJECTORY_HEADER).is_err());
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let err = write_trajectory(
            Path::new("/nonexistent-dir/x.csv"),
            &Trajectory { samples: vec![] },
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }
}
