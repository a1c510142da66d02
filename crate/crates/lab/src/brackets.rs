//! Tables of coordinate brackets, Jacobi residuals and pfaffians.

use std::io::Write;

use geomech::fields::{FieldModel, ModelKind, PlanarModel, PlanarPoint};
use geomech::linalg::{axial_to_matrix, levi_civita};
use geomech::poisson::{
    canonical, cosymplectic_double_monopole, cosymplectic_general, cosymplectic_planar, jacobi_residual, CoSymplecticMatrix,
};
use geomech::souriau::PhasePoint;
use nalgebra::Matrix3;
use serde::Serialize;

/// Which Poisson tensor to tabulate on three-dimensional phase space.
#[derive(Debug, Clone, Copy)]
pub enum SpaceStructure<'a> {
    Canonical,
    Model(&'a FieldModel),
}

impl SpaceStructure<'_> {
    pub fn at(&self, pt: &PhasePoint) -> geomech::Result<CoSymplecticMatrix> {
        let model = match self {
            SpaceStructure::Canonical => return Ok(canonical()),
            SpaceStructure::Model(m) => m,
        };
        match model.kind() {
            ModelKind::DoubleMonopole { e, theta } => cosymplectic_double_monopole(pt, e, theta),
            _ => {
                let s = model.sample(pt)?;
                if s.mu != Default::default() || s.q != Default::default() {
                    return Err(geomech::Error::Precondition(format!("{} has no field-only Poisson tensor", model.name())));
                }
                let b = axial_to_matrix(s.b_field * model.coupling());
                cosymplectic_general(&Matrix3::zeros(), &b, &levi_civita(s.kappa))
            }
        }
    }
}

pub const SPACE_COORDS: [&str; 6] = ["r1", "r2", "r3", "p1", "p2", "p3"];
pub const PLANAR_COORDS: [&str; 4] = ["x1", "x2", "p1", "p2"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketRow {
    pub index: usize,
    pub coords: Vec<f64>,
    /// Upper-triangle brackets `{ξ_a, ξ_b}`, `a < b`, row-major; `NaN` on
    /// singular rows.
    pub brackets: Vec<f64>,
    pub jacobi: f64,
    pub pfaffian: f64,
    pub degeneracy: f64,
    /// `ok`, or the reason the point is singular.
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketTable {
    pub coords: Vec<String>,
    pub rows: Vec<BracketRow>,
}

impl BracketTable {
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.coords.len();
        (0..n).flat_map(|a| ((a + 1)..n).map(move |b| (a, b))).collect()
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["point".to_string()];
        h.extend(self.coords.iter().cloned());
        h.extend(self.pairs().into_iter().map(|(a, b)| format!("{}_{}", self.coords[a], self.coords[b])));
        h.extend(["jacobi", "pfaffian", "degeneracy", "status"].map(String::from));
        h
    }

    /// Bracket `{ξ_a, ξ_b}` of row `row`.
    pub fn get(&self, row: usize, a: usize, b: usize) -> f64 {
        let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
        if lo == hi {
            return 0.0;
        }
        let k = self.pairs().iter().position(|&p| p == (lo, hi)).expect("coordinate index in range");
        sign * self.rows[row].brackets[k]
    }

    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(self.header())?;
        for row in &self.rows {
            let mut rec = vec![row.index.to_string()];
            rec.extend(row.coords.iter().chain(&row.brackets).map(|x| format!("{x:.16e}")));
            rec.extend([row.jacobi, row.pfaffian, row.degeneracy].iter().map(|x| format!("{x:.16e}")));
            rec.push(row.status.clone());
            out.write_record(rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn row<const N: usize, F>(index: usize, x: [f64; N], builder: F, step: f64) -> BracketRow
where
    F: Fn(&[f64; N]) -> geomech::Result<CoSymplecticMatrix<N>>,
{
    let n_pairs = N * (N - 1) / 2;
    let singular = |msg: String| BracketRow {
        index,
        coords: x.to_vec(),
        brackets: vec![f64::NAN; n_pairs],
        jacobi: f64::NAN,
        pfaffian: f64::NAN,
        degeneracy: f64::NAN,
        status: format!("singular: {msg}"),
    };
    let p = match builder(&x) {
        Ok(p) => p,
        Err(err) => return singular(err.to_string()),
    };
    let mut brackets = Vec::with_capacity(n_pairs);
    for a in 0..N {
        for b in (a + 1)..N {
            brackets.push(p.a.get(a, b));
        }
    }
    let (jacobi, pfaffian) = match (jacobi_residual(&builder, &x, step), p.pfaffian()) {
        (Ok(j), Ok(pf)) => (j, pf),
        (Err(err), _) | (_, Err(err)) => return singular(err.to_string()),
    };
    BracketRow { index, coords: x.to_vec(), brackets, jacobi, pfaffian, degeneracy: p.degeneracy_factor, status: "ok".into() }
}

pub fn bracket_table_space(structure: SpaceStructure<'_>, points: &[PhasePoint], step: f64) -> BracketTable {
    let rows = points
        .iter()
        .enumerate()
        .map(|(i, pt)| {
            let t = pt.t;
            row(i, pt.to_array6(), |x: &[f64; 6]| structure.at(&PhasePoint::from_array6(*x, t)), step)
        })
        .collect();
    BracketTable { coords: SPACE_COORDS.map(String::from).to_vec(), rows }
}

pub fn bracket_table_planar(model: &PlanarModel, points: &[PlanarPoint], step: f64) -> BracketTable {
    let rows = points
        .iter()
        .enumerate()
        .map(|(i, pt)| {
            let t = pt.t;
            row(i, pt.to_array4(), |x: &[f64; 4]| cosymplectic_planar(model, &PlanarPoint::from_array4(*x, t)), step)
        })
        .collect();
    BracketTable { coords: PLANAR_COORDS.map(String::from).to_vec(), rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use geomech::fields::{double_monopole, exotic_planar, ScalarField2};
    use geomech::linalg::{Vec2, Vec3};

    #[test]
    fn canonical_rows_are_the_identity_pattern() {
        let pt = PhasePoint::new(Vec3::new(0.3, -1.0, 2.0), Vec3::new(1.0, 0.5, 0.0), 0.0);
        let t = bracket_table_space(SpaceStructure::Canonical, &[pt], 1e-4);
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(t.get(0, a, 3 + b), if a == b { 1.0 } else { 0.0 });
                assert_eq!(t.get(0, a, b), 0.0);
                assert_eq!(t.get(0, 3 + a, 3 + b), 0.0);
            }
        }
        assert_eq!(t.rows[0].jacobi, 0.0);
        // Pf[[0, 𝟙], [−𝟙, 0]] = (−1)^{n(n−1)/2}
        assert_eq!(t.rows[0].pfaffian, -1.0);
    }

    #[test]
    fn double_monopole_momentum_bracket_vanishes_in_the_plane() {
        let m = double_monopole(1.0, 1.0).unwrap();
        let pt = PhasePoint::new(Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), 0.0);
        let t = bracket_table_space(SpaceStructure::Model(&m), &[pt], 1e-4);
        assert_eq!(t.rows[0].status, "ok");
        assert_eq!(t.get(0, 3, 4), 0.0);
        // M* = |r|³|p|³ − eθ r·p = 1
        assert_eq!(t.rows[0].degeneracy, 1.0);
        assert_eq!(t.header().len(), 1 + 6 + 15 + 4);
    }

    #[test]
    fn planar_noncommutativity() {
        let m = exotic_planar(1.0, 1.0, 0.5, ScalarField2::constant(1.0), ScalarField2::constant(0.0)).unwrap();
        let pt = PlanarPoint::new(Vec2::new(0.2, 0.1), Vec2::new(1.0, 0.0), 0.0);
        let t = bracket_table_planar(&m, &[pt], 1e-4);
        assert_eq!(t.get(0, 0, 1), 1.0);
        assert_eq!(t.get(0, 0, 2), 2.0);
        assert_eq!(t.get(0, 2, 3), 2.0);
        assert_eq!(t.pairs().len(), 6);
    }

    #[test]
    fn singular_points_are_marked() {
        let m = double_monopole(1.0, 1.0).unwrap();
        let pts = [
            PhasePoint::new(Vec3::ZERO, Vec3::new(0.0, 1.0, 0.0), 0.0),
            PhasePoint::new(Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), 0.0),
        ];
        let t = bracket_table_space(SpaceStructure::Model(&m), &pts, 1e-4);
        assert_eq!(t.rows.len(), 2);
        assert!(t.rows[0].status.starts_with("singular"));
        assert!(t.rows[0].brackets.iter().all(|b| b.is_nan()));
        assert_eq!(t.rows[1].status, "ok");
    }

    #[test]
    fn csv_has_one_line_per_point() {
        let pt = PhasePoint::new(Vec3::new(1.0, 2.0, 3.0), Vec3::new(1.0, 0.0, 0.0), 0.0);
        let mut buf = Vec::new();
        bracket_table_space(SpaceStructure::Canonical, &[pt, pt], 1e-4).write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("point,r1,r2,r3,p1,p2,p3,r1_r2,"));
    }
}
