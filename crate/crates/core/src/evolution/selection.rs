use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

/// Number of shapes diversity selection keeps out of `n`.
pub fn keep_count(n: usize, keep_fraction: f64) -> usize {
    ((keep_fraction * n as f64).ceil() as usize).clamp(n.min(1), n)
}

/// Farthest-point sampling on a distance matrix. Starts from the farthest
/// pair (smaller id first), then repeatedly adds the shape farthest from
/// everything chosen. Exact ties go to the smaller id. Returns indices in
/// selection order.
pub fn farthest_point_sampling(dist: &[Vec<f64>], ids: &[String], count: usize) -> Vec<usize> {
    let n = ids.len();
    let count = count.min(n);
    if count == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![0];
    }
    let id_order = |i: usize, j: usize| ids[i].cmp(&ids[j]).then(i.cmp(&j));
    let mut seed: Option<(usize, usize)> = None;
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = if id_order(i, j) == Ordering::Greater {
                (j, i)
            } else {
                (i, j)
            };
            seed = Some(match seed {
                None => (a, b),
                Some((x, y)) => match dist[a][b].total_cmp(&dist[x][y]) {
                    Ordering::Greater => (a, b),
                    Ordering::Less => (x, y),
                    Ordering::Equal => {
                        if id_order(a, x).then(id_order(b, y)) == Ordering::Less {
                            (a, b)
                        } else {
                            (x, y)
                        }
                    }
                },
            });
        }
    }
    let (a, b) = seed.expect("at least two shapes");
    let mut chosen = vec![a, b];
    chosen.truncate(count);
    let mut min_dist: Vec<f64> = (0..n).map(|k| dist[k][a].min(dist[k][b])).collect();
    let mut taken = vec![false; n];
    taken[a] = true;
    taken[b] = true;
    while chosen.len() < count {
        let next = (0..n)
            .filter(|&k| !taken[k])
            .max_by(|&x, &y| min_dist[x].total_cmp(&min_dist[y]).then(id_order(y, x)))
            .expect("fewer chosen than shapes");
        taken[next] = true;
        chosen.push(next);
        for k in 0..n {
            min_dist[k] = min_dist[k].min(dist[k][next]);
        }
    }
    chosen
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ranking {
    #[default]
    Plausibility,
    MultiFunctionality,
}

/// Scores a shape is ranked by.
#[derive(Clone, Debug, PartialEq)]
pub struct RankKey<'a> {
    pub id: &'a str,
    pub plausibility: f64,
    pub multi_functionality: usize,
}

/// Order of `keys` under `mode`: descending score, ties by id.
pub fn rank(keys: &[RankKey], mode: Ranking) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (&keys[i], &keys[j]);
        let primary = match mode {
            Ranking::Plausibility => Ordering::Equal,
            Ranking::MultiFunctionality => b.multi_functionality.cmp(&a.multi_functionality),
        };
        primary
            .then(b.plausibility.total_cmp(&a.plausibility))
            .then(a.id.cmp(b.id))
    });
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("s{i}")).collect()
    }

    #[test]
    fn keep_counts() {
        assert_eq!(keep_count(1, 0.5), 1);
        assert_eq!(keep_count(5, 0.5), 3);
        assert_eq!(keep_count(16, 0.5), 8);
        assert_eq!(keep_count(0, 0.5), 0);
        assert_eq!(keep_count(4, 1.0), 4);
    }

    #[test]
    fn collinear_picks_ends() {
        let pos = [0.0, 1.0, 3.0];
        let d: Vec<Vec<f64>> = pos
            .iter()
            .map(|a| pos.iter().map(|b| f64::abs(a - b)).collect())
            .collect();
        assert_eq!(farthest_point_sampling(&d, &ids(3), 2), vec![0, 2]);
        assert_eq!(farthest_point_sampling(&d, &ids(3), 3), vec![0, 2, 1]);
        assert_eq!(farthest_point_sampling(&[vec![0.0]], &ids(1), 1), vec![0]);
    }

    #[test]
    fn ties_go_to_smaller_id() {
        let d = vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
        let names = vec!["c".to_owned(), "a".to_owned(), "b".to_owned()];
        assert_eq!(farthest_point_sampling(&d, &names, 3), vec![1, 2, 0]);
    }

    #[test]
    fn plausibility_order() {
        let keys = [
            RankKey {
                id: "a",
                plausibility: 0.2,
                multi_functionality: 0,
            },
            RankKey {
                id: "b",
                plausibility: 0.9,
                multi_functionality: 0,
            },
            RankKey {
                id: "c",
                plausibility: 0.5,
                multi_functionality: 0,
            },
        ];
        assert_eq!(rank(&keys, Ranking::Plausibility), vec![1, 2, 0]);
    }

    #[test]
    fn multi_functionality_order() {
        let keys = [
            RankKey {
                id: "a",
                plausibility: 0.7,
                multi_functionality: 2,
            },
            RankKey {
                id: "b",
                plausibility: 0.9,
                multi_functionality: 2,
            },
            RankKey {
                id: "c",
                plausibility: 1.0,
                multi_functionality: 1,
            },
        ];
        assert_eq!(rank(&keys, Ranking::MultiFunctionality), vec![1, 0, 2]);
        let tied = [
            RankKey {
                id: "z",
                plausibility: 0.5,
                multi_functionality: 0,
            },
            RankKey {
                id: "y",
                plausibility: 0.5,
                multi_functionality: 0,
            },
        ];
        assert_eq!(rank(&tied, Ranking::Plausibility), vec![1, 0]);
    }
}
