//! Finite probability spaces with a filtration given as refining partitions.
//!
//! Level `0` is the trivial partition `{Ω}` and the last level is the
//! partition into singletons. Conditional expectation at level `t` averages
//! over each atom of `P_t` with the probability weights.

use crate::error::{Error, Result};

/// Accepted deviation of the probability sum from one before rejection.
pub const NORMALIZE_TOLERANCE: f64 = 1e-9;
/// Deviation that is left untouched (no renormalization below it).
pub const SUM_TOLERANCE: f64 = 1e-12;

/// One block of a partition together with its probability mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub level: usize,
    pub members: Vec<usize>,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct Level {
    atoms: Vec<Vec<usize>>,
    atom_of: Vec<usize>,
}

/// Increasing sequence of partitions `P_0, ..., P_T` of the outcome indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Filtration {
    levels: Vec<Level>,
}

impl Filtration {
    /// Validates that the partitions start trivial, refine, and end in singletons.
    pub fn new(n: usize, levels: Vec<Vec<Vec<usize>>>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidFiltration("no levels".into()));
        }
        let mut built = Vec::with_capacity(levels.len());
        for (t, atoms) in levels.into_iter().enumerate() {
            let mut atom_of = vec![usize::MAX; n];
            let mut canonical = Vec::with_capacity(atoms.len());
            for (k, mut members) in atoms.into_iter().enumerate() {
                if members.is_empty() {
                    return Err(Error::InvalidFiltration(format!("level {t}: atom {k} is empty")));
                }
                members.sort_unstable();
                for &i in &members {
                    if i >= n {
                        return Err(Error::InvalidFiltration(format!(
                            "level {t}: outcome index {i} out of range"
                        )));
                    }
                    if atom_of[i] != usize::MAX {
                        return Err(Error::InvalidFiltration(format!(
                            "level {t}: outcome {i} appears in more than one atom"
                        )));
                    }
                    atom_of[i] = k;
                }
                canonical.push(members);
            }
            if let Some(i) = atom_of.iter().position(|&a| a == usize::MAX) {
                return Err(Error::InvalidFiltration(format!("level {t}: outcome {i} is not covered")));
            }
            built.push(Level { atoms: canonical, atom_of });
        }
        if built[0].atoms.len() != 1 {
            return Err(Error::InvalidFiltration("level 0 must be a single atom".into()));
        }
        if built.last().map(|l| l.atoms.len()) != Some(n) {
            return Err(Error::InvalidFiltration("last level must be the singleton partition".into()));
        }
        for t in 0..built.len() - 1 {
            let (coarse, fine) = (&built[t], &built[t + 1]);
            for members in &fine.atoms {
                let parent = coarse.atom_of[members[0]];
                if members.iter().any(|&i| coarse.atom_of[i] != parent) {
                    return Err(Error::InvalidFiltration(format!(
                        "level {} does not refine level {t}",
                        t + 1
                    )));
                }
            }
        }
        Ok(Self { levels: built })
    }

    /// `{Ω}` followed by singletons, or just `{Ω}` when there is one outcome.
    pub fn one_period(n: usize) -> Self {
        let mut levels = vec![vec![(0..n).collect::<Vec<_>>()]];
        if n > 1 {
            levels.push((0..n).map(|i| vec![i]).collect());
        }
        Self::new(n, levels).expect("one-period filtration is valid")
    }

    pub fn horizon(&self) -> usize {
        self.levels.len() - 1
    }

    /// Atom member lists of `P_t`.
    pub fn partition(&self, t: usize) -> Result<&[Vec<usize>]> {
        self.level(t).map(|l| l.atoms.as_slice())
    }

    /// Index of the atom of `P_t` containing outcome `i`.
    pub fn atom_index(&self, t: usize, i: usize) -> Result<usize> {
        Ok(self.level(t)?.atom_of[i])
    }

    fn level(&self, t: usize) -> Result<&Level> {
        self.levels.get(t).ok_or(Error::LevelOutOfRange { level: t, horizon: self.horizon() })
    }
}

/// Outcomes with strictly positive probabilities and a filtration.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMeasureSpace {
    labels: Vec<String>,
    weights: Vec<f64>,
    filtration: Filtration,
}

impl FiniteMeasureSpace {
    pub fn new(labels: Vec<String>, weights: Vec<f64>, filtration: Filtration) -> Result<Self> {
        let weights = validate_weights(weights)?;
        if labels.len() != weights.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} labels", weights.len()),
                actual: format!("{}", labels.len()),
            });
        }
        if filtration.levels[0].atom_of.len() != weights.len() {
            return Err(Error::InvalidFiltration("filtration built for a different outcome count".into()));
        }
        Ok(Self { labels, weights, filtration })
    }

    /// Unlabelled one-period space (`o0, o1, ...`).
    pub fn one_period(weights: Vec<f64>) -> Result<Self> {
        let n = weights.len();
        let labels = (0..n).map(|i| format!("o{i}")).collect();
        Self::new(labels, weights, Filtration::one_period(n.max(1)))
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::one_period(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn filtration(&self) -> &Filtration {
        &self.filtration
    }

    pub fn horizon(&self) -> usize {
        self.filtration.horizon()
    }

    pub fn check_level(&self, t: usize) -> Result<()> {
        self.filtration.level(t).map(|_| ())
    }

    pub fn atoms_at(&self, t: usize) -> Result<Vec<Atom>> {
        Ok(self
            .filtration
            .partition(t)?
            .iter()
            .map(|members| Atom {
                level: t,
                mass: members.iter().map(|&i| self.weights[i]).sum(),
                members: members.clone(),
            })
            .collect())
    }

    pub fn expectation(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(m, v)| m * v).sum()
    }

    /// `E[x | F_t]` as a function on outcomes, constant on atoms of `P_t`.
    pub fn conditional_expectation(&self, x: &[f64], t: usize) -> Result<Vec<f64>> {
        self.conditional_expectation_vec(x, 1, t)
    }

    /// Coordinatewise conditional expectation of a row-major `n x d` array.
    pub fn conditional_expectation_vec(&self, x: &[f64], d: usize, t: usize) -> Result<Vec<f64>> {
        let n = self.len();
        if x.len() != n * d {
            return Err(Error::ShapeMismatch { expected: format!("{n}x{d}"), actual: format!("{}", x.len()) });
        }
        let mut out = vec![0.0; n * d];
        for members in self.filtration.partition(t)? {
            let mass: f64 = members.iter().map(|&i| self.weights[i]).sum();
            for j in 0..d {
                let avg = members.iter().map(|&i| self.weights[i] * x[i * d + j]).sum::<f64>() / mass;
                for &i in members {
                    out[i * d + j] = avg;
                }
            }
        }
        Ok(out)
    }

    /// Tower property `E[E[x|F_t]|F_s] = E[x|F_s]` to `1e-10`.
    pub fn tower_check(&self, x: &[f64], s: usize, t: usize) -> Result<bool> {
        if s > t {
            return Err(Error::InvalidLevels(format!("s = {s} exceeds t = {t}")));
        }
        let inner = self.conditional_expectation(x, t)?;
        let lhs = self.conditional_expectation(&inner, s)?;
        let rhs = self.conditional_expectation(x, s)?;
        Ok(lhs.iter().zip(&rhs).all(|(a, b)| (a - b).abs() <= 1e-10))
    }

    /// True when `x` (row-major `n x d`) is constant on every atom of `P_t`.
    pub fn is_measurable(&self, x: &[f64], d: usize, t: usize, tol: f64) -> Result<bool> {
        for members in self.filtration.partition(t)? {
            let first = members[0];
            for &i in &members[1..] {
                for j in 0..d {
                    if (x[i * d + j] - x[first * d + j]).abs() > tol {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }
}

fn validate_weights(mut weights: Vec<f64>) -> Result<Vec<f64>> {
    if weights.is_empty() {
        return Err(Error::EmptySpace);
    }
    for (index, &value) in weights.iter().enumerate() {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::NonPositiveProbability { index, value });
        }
    }
    let sum: f64 = weights.iter().sum();
    let dev = (sum - 1.0).abs();
    if dev > NORMALIZE_TOLERANCE {
        return Err(Error::WeightsSum { sum });
    }
    if dev > SUM_TOLERANCE {
        weights.iter_mut().for_each(|w| *w /= sum);
    }
    Ok(weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_outcome() -> FiniteMeasureSpace {
        let filt = Filtration::new(3, vec![vec![vec![0, 1, 2]], vec![vec![0, 1], vec![2]], vec![vec![0], vec![1], vec![2]]])
            .unwrap();
        FiniteMeasureSpace::new(vec!["a".into(), "b".into(), "c".into()], vec![0.25, 0.25, 0.5], filt).unwrap()
    }

    #[test]
    fn conditional_expectation_examples() {
        let single = FiniteMeasureSpace::one_period(vec![1.0]).unwrap();
        assert_eq!(single.conditional_expectation(&[5.0], 0).unwrap(), vec![5.0]);

        let two = FiniteMeasureSpace::uniform(2).unwrap();
        assert_eq!(two.conditional_expectation(&[0.0, 1.0], 0).unwrap(), vec![0.5, 0.5]);

        let s = three_outcome();
        assert_eq!(s.conditional_expectation(&[2.0, 4.0, 6.0], 1).unwrap(), vec![3.0, 3.0, 6.0]);
    }

    #[test]
    fn level_out_of_range() {
        let s = three_outcome();
        assert_eq!(s.conditional_expectation(&[1.0, 1.0, 1.0], 3), Err(Error::LevelOutOfRange { level: 3, horizon: 2 }));
        assert!(s.atoms_at(5).is_err());
    }

    #[test]
    fn atoms_examples() {
        let single = FiniteMeasureSpace::one_period(vec![1.0]).unwrap();
        let atoms = single.atoms_at(0).unwrap();
        assert_eq!(atoms.len(), 1);
        assert_eq!(atoms[0].members, vec![0]);

        let s = three_outcome();
        assert_eq!(s.atoms_at(2).unwrap().len(), 3);
        let masses: Vec<f64> = s.atoms_at(1).unwrap().iter().map(|a| a.mass).collect();
        assert_eq!(masses, vec![0.5, 0.5]);
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(matches!(FiniteMeasureSpace::one_period(vec![0.5, 0.48]), Err(Error::WeightsSum { .. })));
        assert!(matches!(
            FiniteMeasureSpace::one_period(vec![1.0, 0.0]),
            Err(Error::NonPositiveProbability { index: 1, .. })
        ));
        assert!(matches!(FiniteMeasureSpace::one_period(vec![]), Err(Error::EmptySpace)));
    }

    #[test]
    fn normalizes_round_off() {
        let s = FiniteMeasureSpace::one_period(vec![0.5 + 4e-10, 0.5]).unwrap();
        assert!((s.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        // within the invariant tolerance the weights are kept bit-for-bit
        let w = vec![0.1, 0.2, 0.7];
        let s = FiniteMeasureSpace::one_period(w.clone()).unwrap();
        assert_eq!(s.weights(), w.as_slice());
    }

    #[test]
    fn rejects_bad_filtrations() {
        // level 0 not trivial
        assert!(Filtration::new(2, vec![vec![vec![0], vec![1]]]).is_err());
        // does not end in singletons
        assert!(Filtration::new(3, vec![vec![vec![0, 1, 2]], vec![vec![0, 1], vec![2]]]).is_err());
        // not refining
        let bad = vec![
            vec![vec![0, 1, 2, 3]],
            vec![vec![0, 1], vec![2, 3]],
            vec![vec![0, 2], vec![1], vec![3]],
            vec![vec![0], vec![1], vec![2], vec![3]],
        ];
        assert!(Filtration::new(4, bad).is_err());
        // duplicate outcome
        assert!(Filtration::new(2, vec![vec![vec![0, 1, 1]], vec![vec![0], vec![1]]]).is_err());
        // uncovered outcome
        assert!(Filtration::new(3, vec![vec![vec![0, 1]], vec![vec![0], vec![1], vec![2]]]).is_err());
    }

    #[test]
    fn tower_trivial_cases() {
        let s = three_outcome();
        let x = [1.0, -2.0, 7.5];
        for t in 0..=2 {
            assert!(s.tower_check(&x, t, t).unwrap());
        }
        assert!(s.tower_check(&[3.0, 3.0, 3.0], 0, 2).unwrap());
        assert!(s.tower_check(&x, 2, 1).is_err());
    }

    #[test]
    fn measurability() {
        let s = three_outcome();
        assert!(s.is_measurable(&[3.0, 3.0, 6.0], 1, 1, 0.0).unwrap());
        assert!(!s.is_measurable(&[3.0, 3.1, 6.0], 1, 1, 0.0).unwrap());
        assert!(!s.is_measurable(&[3.0, 3.0, 6.0], 1, 0, 0.0).unwrap());
    }
}
