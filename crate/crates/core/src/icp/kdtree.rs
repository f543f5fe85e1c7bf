use super::IcpError;

/// Maximum number of points held by a leaf.
pub const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: u32,
        end: u32,
    },
    Split {
        axis: u8,
        value: f64,
        // left child is always the next node
        right: u32,
    },
}

/// Immutable 3-D tree for exact nearest-neighbor queries.
///
/// Construction is deterministic: each node splits at the median along its
/// widest axis, ordering points by coordinate and then by index. Queries
/// allocate nothing and break distance ties by the smaller index.
#[derive(Debug, Clone)]
pub struct KdTree3 {
    nodes: Vec<Node>,
    // points reordered so each leaf is contiguous, with their original indices
    points: Vec<[f64; 3]>,
    indices: Vec<u32>,
}

#[inline]
fn squared_distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let (dx, dy, dz) = (a[0] - b[0], a[1] - b[1], a[2] - b[2]);
    dx * dx + dy * dy + dz * dz
}

impl KdTree3 {
    pub fn build(points: &[[f64; 3]]) -> Result<Self, IcpError> {
        if points.is_empty() {
            return Err(IcpError::EmptyPointSet);
        }
        if points.len() > u32::MAX as usize {
            return Err(IcpError::TooManyPoints(points.len()));
        }
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * points.len().div_ceil(LEAF_SIZE));
        build_node(points, &mut order, 0, &mut nodes);
        Ok(Self {
            nodes,
            points: order.iter().map(|&i| points[i as usize]).collect(),
            indices: order,
        })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Index and squared distance of the stored point closest to `query`.
    pub fn nearest(&self, query: &[f64; 3]) -> (usize, f64) {
        let mut best = (u32::MAX, f64::INFINITY);
        self.search(0, query, &mut best);
        (best.0 as usize, best.1)
    }

    fn search(&self, node: usize, q: &[f64; 3], best: &mut (u32, f64)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                let (start, end) = (start as usize, end as usize);
                for (p, &idx) in self.points[start..end].iter().zip(&self.indices[start..end]) {
                    let d = squared_distance(p, q);
                    if d < best.1 || (d == best.1 && idx < best.0) {
                        *best = (idx, d);
                    }
                }
            }
            Node::Split { axis, value, right } => {
                let diff = q[axis as usize] - value;
                let (near, far) = if diff < 0.0 {
                    (node + 1, right as usize)
                } else {
                    (right as usize, node + 1)
                };
                self.search(near, q, best);
                // `<=` so equidistant points with smaller indices are still found
                if diff * diff <= best.1 {
                    self.search(far, q, best);
                }
            }
        }
    }
}

fn build_node(points: &[[f64; 3]], order: &mut [u32], offset: usize, nodes: &mut Vec<Node>) {
    if order.len() <= LEAF_SIZE {
        nodes.push(Node::Leaf {
            start: offset as u32,
            end: (offset + order.len()) as u32,
        });
        return;
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &i in order.iter() {
        let p = &points[i as usize];
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let mut axis = 0;
    for k in 1..3 {
        if hi[k] - lo[k] > hi[axis] - lo[axis] {
            axis = k;
        }
    }
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        points[a as usize][axis]
            .total_cmp(&points[b as usize][axis])
            .then(a.cmp(&b))
    });
    let value = points[order[mid] as usize][axis];

    let at = nodes.len();
    nodes.push(Node::Leaf { start: 0, end: 0 });
    let (left, right) = order.split_at_mut(mid);
    build_node(points, left, offset, nodes);
    let right_at = nodes.len() as u32;
    build_node(points, right, offset + mid, nodes);
    nodes[at] = Node::Split {
        axis: axis as u8,
        value,
        right: right_at,
    };
}
