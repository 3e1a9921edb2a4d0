//! Static k-d tree for exact nearest-neighbour queries under Minkowski
//! distances.
//!
//! The pruning rule uses `|q[axis] - split| <= D_p(q, x)` which holds for
//! every p-norm with `p >= 1`. Subtrees are only skipped when that gap is
//! strictly larger than the current best distance, so equidistant candidates
//! are always visited and the lowest point index wins ties exactly as in a
//! linear scan.

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
pub struct KdTree<'a> {
    points: &'a [Vec<f64>],
    order: Vec<usize>,
    nodes: Vec<Node>,
    root: usize,
}

impl<'a> KdTree<'a> {
    /// Builds a tree over `points`, which must be nonempty and share one
    /// dimension.
    pub fn build(points: &'a [Vec<f64>]) -> Self {
        assert!(!points.is_empty(), "k-d tree needs at least one point");
        let mut tree = Self {
            points,
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
            root: 0,
        };
        tree.root = tree.build_node(0, points.len());
        tree
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return self.nodes.len() - 1;
        }
        let axis = self.widest_axis(start, end);
        let mid = start + (end - start) / 2;
        let pts = self.points;
        self.order[start..end]
            .select_nth_unstable_by(mid - start, |&a, &b| pts[a][axis].total_cmp(&pts[b][axis]));
        let value = pts[self.order[mid]][axis];
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes.push(Node::Split {
            axis,
            value,
            left,
            right,
        });
        self.nodes.len() - 1
    }

    fn widest_axis(&self, start: usize, end: usize) -> usize {
        let dim = self.points[0].len();
        let mut best = (0, f64::NEG_INFINITY);
        for axis in 0..dim {
            let (lo, hi) = self.order[start..end].iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                let v = self.points[i][axis];
                (lo.min(v), hi.max(v))
            });
            if hi - lo > best.1 {
                best = (axis, hi - lo);
            }
        }
        best.0
    }

    /// Index and distance of the nearest point to `query`. Ties go to the
    /// lowest index.
    pub fn nearest(&self, query: &[f64], dist: impl Fn(&[f64], &[f64]) -> f64) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(self.root, query, &dist, &mut best);
        best
    }

    fn search(&self, node: usize, query: &[f64], dist: &impl Fn(&[f64], &[f64]) -> f64, best: &mut (usize, f64)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let d = dist(query, &self.points[i]);
                    if d < best.1 || (d == best.1 && i < best.0) {
                        *best = (i, d);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let gap = query[axis] - value;
                let (near, far) = if gap < 0.0 { (left, right) } else { (right, left) };
                self.search(near, query, dist, best);
                if gap.abs() <= best.1 {
                    self.search(far, query, dist, best);
                }
            }
        }
    }
}
