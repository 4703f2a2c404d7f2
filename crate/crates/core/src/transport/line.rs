//! One-dimensional transport in closed form: `∫|F - G|` on the interval and
//! `min_c ∫|F - G - c|` on the circle (taken twice, for the doubled arc metric).

use std::cmp::Ordering;

use num_traits::{Signed, Zero};

use crate::num::{rational_to_f64, Num, Rational};

/// Signed mass at a position: `+` for the first measure, `-` for the second.
pub(crate) struct Events {
    exact: Option<Vec<(Rational, Rational)>>,
    float: Vec<(f64, f64)>,
}

impl Events {
    /// Positions are exact iff every position is exact.
    pub(crate) fn new(items: Vec<(Num, Rational)>) -> Events {
        let all_exact = items.iter().all(|(p, _)| p.is_exact());
        if all_exact {
            let mut v: Vec<(Rational, Rational)> = items
                .into_iter()
                .map(|(p, w)| (p.as_exact().expect("checked").clone(), w))
                .collect();
            v.sort_by(|a, b| a.0.cmp(&b.0));
            Events {
                exact: Some(v),
                float: Vec::new(),
            }
        } else {
            let mut v: Vec<(f64, f64)> = items
                .into_iter()
                .map(|(p, w)| (p.to_f64(), rational_to_f64(&w)))
                .collect();
            v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
            Events {
                exact: None,
                float: v,
            }
        }
    }

    /// `∫ |F - G|` over the real line.
    pub(crate) fn line(&self) -> Num {
        match &self.exact {
            Some(v) => {
                let mut h = Rational::zero();
                let mut acc = Rational::zero();
                for k in 0..v.len() {
                    h += &v[k].1;
                    if k + 1 < v.len() && !h.is_zero() {
                        acc += h.abs() * (&v[k + 1].0 - &v[k].0);
                    }
                }
                Num::Exact(acc)
            }
            None => {
                let v = &self.float;
                let mut h = 0.0;
                let mut acc = 0.0;
                for k in 0..v.len() {
                    h += v[k].1;
                    if k + 1 < v.len() {
                        acc += h.abs() * (v[k + 1].0 - v[k].0);
                    }
                }
                Num::Float(acc)
            }
        }
    }

    /// `2 · min_c ∫_0^1 |F - G - c|` for positions in `[0,1)`.
    pub(crate) fn circle(&self) -> Num {
        match &self.exact {
            Some(v) => {
                let mut pieces: Vec<(Rational, Rational)> = Vec::with_capacity(v.len() + 1);
                let mut h = Rational::zero();
                let mut last = Rational::zero();
                for (pos, w) in v {
                    pieces.push((h.clone(), pos - &last));
                    h += w;
                    last = pos.clone();
                }
                pieces.push((h, Rational::from_integer(1.into()) - &last));
                pieces.sort_by(|a, b| a.0.cmp(&b.0));
                let half = Rational::new(1.into(), 2.into());
                let mut cum = Rational::zero();
                let mut c = Rational::zero();
                for (hv, len) in &pieces {
                    cum += len;
                    if cum >= half {
                        c = hv.clone();
                        break;
                    }
                }
                let acc: Rational = pieces.iter().map(|(hv, len)| (hv - &c).abs() * len).sum();
                Num::Exact(acc * Rational::from_integer(2.into()))
            }
            None => {
                let v = &self.float;
                let mut pieces: Vec<(f64, f64)> = Vec::with_capacity(v.len() + 1);
                let mut h = 0.0;
                let mut last = 0.0;
                for &(pos, w) in v {
                    pieces.push((h, pos - last));
                    h += w;
                    last = pos;
                }
                pieces.push((h, 1.0 - last));
                pieces.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
                let mut cum = 0.0;
                let mut c = pieces.last().map_or(0.0, |p| p.0);
                for &(hv, len) in &pieces {
                    cum += len;
                    if cum >= 0.5 {
                        c = hv;
                        break;
                    }
                }
                let acc: f64 = pieces.iter().map(|&(hv, len)| (hv - c).abs() * len).sum();
                Num::Float(2.0 * acc)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rat;

    #[test]
    fn line_half_mass_moves_half() {
        let e = Events::new(vec![
            (Num::exact(0, 1), rat(1, 2)),
            (Num::exact(1, 1), rat(1, 2)),
            (Num::exact(1, 2), rat(-1, 1)),
        ]);
        assert_eq!(e.line(), Num::exact(1, 2));
    }

    #[test]
    fn circle_wraps_around() {
        // 0.95 vs 0.05: shortest arc 0.1, doubled
        let e = Events::new(vec![
            (Num::exact(19, 20), rat(1, 1)),
            (Num::exact(1, 20), rat(-1, 1)),
        ]);
        assert_eq!(e.circle(), Num::exact(1, 5));
        let f = Events::new(vec![(Num::Float(0.95), rat(1, 1)), (Num::Float(0.05), rat(-1, 1))]);
        assert!((f.circle().to_f64() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn circle_antipodal() {
        let e = Events::new(vec![(Num::exact(0, 1), rat(1, 1)), (Num::exact(1, 2), rat(-1, 1))]);
        assert_eq!(e.circle(), Num::one());
    }
}
