//! Two-level minimization of functions over multi-valued variables.
//!
//! A cube fixes, for every variable, a non-empty set of allowed values
//! (a bit mask over value indices). A cover is a disjunction of cubes.

use crate::formula::{CmpOp, GExpr, Ground};
use crate::problem::VarDecl;

/// Beyond this many candidate cubes the exact prime enumeration is skipped.
pub const EXACT_CUBE_LIMIT: usize = 1 << 18;
/// Node budget of the exact cover search.
pub const COVER_SEARCH_LIMIT: usize = 200_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cube {
    pub masks: Vec<u64>,
}

impl Cube {
    pub fn contains(&self, point: &[usize]) -> bool {
        self.masks.iter().zip(point).all(|(m, &x)| m & (1 << x) != 0)
    }

    /// Number of variables the cube actually restricts.
    pub fn literal_count(&self, domains: &[usize]) -> usize {
        self.masks
            .iter()
            .zip(domains)
            .filter(|(&m, &d)| m != full_mask(d))
            .count()
    }
}

fn full_mask(d: usize) -> u64 {
    if d >= 64 {
        u64::MAX
    } else {
        (1u64 << d) - 1
    }
}

fn decode_point(domains: &[usize], mut idx: usize) -> Vec<usize> {
    domains
        .iter()
        .map(|&d| {
            let x = idx % d;
            idx /= d;
            x
        })
        .collect()
}

fn encode_point(domains: &[usize], point: &[usize]) -> usize {
    let mut idx = 0;
    let mut place = 1;
    for (&x, &d) in point.iter().zip(domains) {
        idx += x * place;
        place *= d;
    }
    idx
}

/// Calls `f` on every point of the cube.
fn for_each_point(cube: &Cube, domains: &[usize], f: &mut impl FnMut(usize) -> bool) -> bool {
    let choices: Vec<Vec<usize>> = cube
        .masks
        .iter()
        .zip(domains)
        .map(|(&m, &d)| (0..d).filter(|&x| m & (1 << x) != 0).collect())
        .collect();
    let mut pos = vec![0usize; domains.len()];
    loop {
        let point: Vec<usize> = pos.iter().zip(&choices).map(|(&k, c)| c[k]).collect();
        if !f(encode_point(domains, &point)) {
            return false;
        }
        let mut k = 0;
        loop {
            if k == pos.len() {
                return true;
            }
            pos[k] += 1;
            if pos[k] < choices[k].len() {
                break;
            }
            pos[k] = 0;
            k += 1;
        }
    }
}

fn is_implicant(cube: &Cube, domains: &[usize], allowed: &[bool]) -> bool {
    for_each_point(cube, domains, &mut |p| allowed[p])
}

/// Minimum sum-of-products cover of `on`. Points in `dc` may be covered or
/// not. `on` and `dc` are indexed in mixed radix over `domains` (first
/// variable fastest).
pub fn minimize(domains: &[usize], on: &[bool], dc: &[bool]) -> Vec<Cube> {
    assert!(domains.iter().all(|&d| (1..=64).contains(&d)));
    let total: usize = domains.iter().product();
    assert_eq!(on.len(), total);
    let allowed: Vec<bool> = (0..total).map(|p| on[p] || dc.get(p).copied().unwrap_or(false)).collect();
    let on_points: Vec<usize> = (0..total).filter(|&p| on[p]).collect();
    if on_points.is_empty() {
        return Vec::new();
    }
    if on_points.len() == total || allowed.iter().all(|&a| a) {
        return vec![Cube { masks: domains.iter().map(|&d| full_mask(d)).collect() }];
    }
    let cube_space = domains
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul((1usize << d.min(20)) - 1));
    let primes = match cube_space {
        Some(n) if n <= EXACT_CUBE_LIMIT => all_primes(domains, &allowed),
        _ => expanded_cubes(domains, &allowed, &on_points),
    };
    select_cover(domains, &primes, &on_points)
}

/// Every maximal implicant, by enumerating all cubes.
fn all_primes(domains: &[usize], allowed: &[bool]) -> Vec<Cube> {
    let per_var: Vec<u64> = domains.iter().map(|&d| full_mask(d)).collect();
    let mut implicants = Vec::new();
    let mut masks = vec![1u64; domains.len()];
    loop {
        let cube = Cube { masks: masks.clone() };
        if is_implicant(&cube, domains, allowed) {
            implicants.push(cube);
        }
        let mut k = 0;
        loop {
            if k == masks.len() {
                return keep_maximal(domains, implicants, allowed);
            }
            masks[k] += 1;
            if masks[k] <= per_var[k] {
                break;
            }
            masks[k] = 1;
            k += 1;
        }
    }
}

fn keep_maximal(domains: &[usize], implicants: Vec<Cube>, allowed: &[bool]) -> Vec<Cube> {
    implicants
        .into_iter()
        .filter(|c| {
            (0..domains.len()).all(|k| {
                (0..domains[k]).all(|x| {
                    if c.masks[k] & (1 << x) != 0 {
                        return true;
                    }
                    let mut bigger = c.clone();
                    bigger.masks[k] |= 1 << x;
                    !is_implicant(&bigger, domains, allowed)
                })
            })
        })
        .collect()
}

/// Fallback for large spaces: grow each on-point greedily into a prime.
fn expanded_cubes(domains: &[usize], allowed: &[bool], on_points: &[usize]) -> Vec<Cube> {
    let mut out: Vec<Cube> = Vec::new();
    for &p in on_points {
        if out.iter().any(|c| c.contains(&decode_point(domains, p))) {
            continue;
        }
        let point = decode_point(domains, p);
        let mut cube = Cube { masks: point.iter().map(|&x| 1u64 << x).collect() };
        for k in 0..domains.len() {
            for x in 0..domains[k] {
                if cube.masks[k] & (1 << x) != 0 {
                    continue;
                }
                let mut bigger = cube.clone();
                bigger.masks[k] |= 1 << x;
                if is_implicant(&bigger, domains, allowed) {
                    cube = bigger;
                }
            }
        }
        out.push(cube);
    }
    out
}

struct CoverSearch<'a> {
    covers: Vec<Vec<usize>>,
    cost: Vec<usize>,
    n_points: usize,
    best: Option<(usize, usize, Vec<usize>)>,
    nodes: usize,
    cubes: &'a [Cube],
}

impl CoverSearch<'_> {
    fn search(&mut self, covered: &mut Vec<u32>, chosen: &mut Vec<usize>, lits: usize) {
        self.nodes += 1;
        if self.nodes > COVER_SEARCH_LIMIT {
            return;
        }
        if let Some((bn, bl, _)) = &self.best {
            if chosen.len() > *bn || (chosen.len() == *bn && lits >= *bl) {
                return;
            }
        }
        let Some(point) = (0..self.n_points).find(|&p| covered[p] == 0) else {
            self.best = Some((chosen.len(), lits, chosen.clone()));
            return;
        };
        if let Some((bn, _, _)) = &self.best {
            if chosen.len() + 1 > *bn {
                return;
            }
        }
        let mut options: Vec<usize> = (0..self.cubes.len()).filter(|&c| self.covers[c].contains(&point)).collect();
        options.sort_by_key(|&c| (usize::MAX - self.covers[c].len(), self.cost[c]));
        for c in options {
            for &p in &self.covers[c] {
                covered[p] += 1;
            }
            chosen.push(c);
            self.search(covered, chosen, lits + self.cost[c]);
            chosen.pop();
            for &p in &self.covers[c] {
                covered[p] -= 1;
            }
        }
    }
}

fn select_cover(domains: &[usize], primes: &[Cube], on_points: &[usize]) -> Vec<Cube> {
    let covers: Vec<Vec<usize>> = primes
        .iter()
        .map(|c| {
            on_points
                .iter()
                .enumerate()
                .filter(|(_, &p)| c.contains(&decode_point(domains, p)))
                .map(|(k, _)| k)
                .collect()
        })
        .collect();
    let cost: Vec<usize> = primes.iter().map(|c| c.literal_count(domains)).collect();

    // Greedy solution seeds the bound of the exact search.
    let mut covered = vec![false; on_points.len()];
    let mut greedy = Vec::new();
    while covered.iter().any(|c| !c) {
        let best = (0..primes.len())
            .max_by_key(|&c| {
                let gain = covers[c].iter().filter(|&&p| !covered[p]).count();
                (gain, usize::MAX - cost[c], usize::MAX - c)
            })
            .expect("every on-point has a prime");
        for &p in &covers[best] {
            covered[p] = true;
        }
        greedy.push(best);
    }
    let greedy_lits = greedy.iter().map(|&c| cost[c]).sum();

    let mut search = CoverSearch {
        covers,
        cost,
        n_points: on_points.len(),
        best: Some((greedy.len(), greedy_lits, greedy)),
        nodes: 0,
        cubes: primes,
    };
    search.search(&mut vec![0; on_points.len()], &mut Vec::new(), 0);
    let (_, _, mut chosen) = search.best.expect("greedy cover always exists");
    chosen.sort_unstable();
    let mut out: Vec<Cube> = chosen.into_iter().map(|c| primes[c].clone()).collect();
    out.sort();
    out
}

/// Converts a cover over `vars` (a subset of the problem variables, given by
/// index, with value indices into their declarations) into a ground formula.
pub fn cover_to_ground(cover: &[Cube], vars: &[usize], decls: &[VarDecl]) -> Ground {
    Ground::or(cover.iter().map(|cube| {
        Ground::and(cube.masks.iter().zip(vars).filter_map(|(&m, &v)| {
            let values = &decls[v].values;
            let d = values.len();
            if m == full_mask(d) {
                return None;
            }
            let inside: Vec<i64> = (0..d).filter(|&x| m & (1 << x) != 0).map(|x| values[x]).collect();
            let outside: Vec<i64> = (0..d).filter(|&x| m & (1 << x) == 0).map(|x| values[x]).collect();
            let lit = |op, a: i64| Ground::Cmp(GExpr::Var(v), op, GExpr::Const(a));
            Some(if inside.len() == 1 {
                lit(CmpOp::Eq, inside[0])
            } else if outside.len() == 1 {
                lit(CmpOp::Ne, outside[0])
            } else {
                Ground::or(inside.into_iter().map(|a| lit(CmpOp::Eq, a)))
            })
        }))
    }))
}
