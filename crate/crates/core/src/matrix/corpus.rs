use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{MatrixPoint, MatrixShape, ScalarFunction};

/// Properties asserted by the corpus author; verified by the convexity checks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    pub convex: bool,
    pub rank_one_convex: bool,
    pub separately_convex: bool,
    pub rank_one_affine: bool,
}

impl Flags {
    const NONE: Flags = Flags {
        convex: false,
        rank_one_convex: false,
        separately_convex: false,
        rank_one_affine: false,
    };
    const CONVEX: Flags = Flags {
        convex: true,
        rank_one_convex: true,
        separately_convex: true,
        rank_one_affine: false,
    };

    pub fn names(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.convex {
            out.push("convex");
        }
        if self.rank_one_convex {
            out.push("rank_one_convex");
        }
        if self.separately_convex {
            out.push("separately_convex");
        }
        if self.rank_one_affine {
            out.push("rank_one_affine");
        }
        out
    }

    pub fn has(&self, flag: &str) -> bool {
        self.names().contains(&flag)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Accepts {
    Any,
    Exactly(MatrixShape),
    MinDim(usize),
}

type Evaluator = Arc<dyn Fn(&MatrixPoint) -> f64 + Send + Sync>;
type Gradient = Arc<dyn Fn(&MatrixPoint) -> Option<MatrixPoint> + Send + Sync>;

/// An analytic test function with optional exact gradient.
#[derive(Clone)]
pub struct FunctionHandle {
    name: String,
    accepts: Accepts,
    eval: Evaluator,
    gradient: Option<Gradient>,
    pub flags: Flags,
}

impl fmt::Debug for FunctionHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionHandle")
            .field("name", &self.name)
            .field("flags", &self.flags)
            .finish()
    }
}

impl FunctionHandle {
    pub fn new(
        name: impl Into<String>,
        flags: Flags,
        eval: impl Fn(&MatrixPoint) -> f64 + Send + Sync + 'static,
    ) -> Self {
        FunctionHandle {
            name: name.into(),
            accepts: Accepts::Any,
            eval: Arc::new(eval),
            gradient: None,
            flags,
        }
    }

    pub fn with_gradient(
        mut self,
        grad: impl Fn(&MatrixPoint) -> Option<MatrixPoint> + Send + Sync + 'static,
    ) -> Self {
        self.gradient = Some(Arc::new(grad));
        self
    }

    fn only(mut self, shape: MatrixShape) -> Self {
        self.accepts = Accepts::Exactly(shape);
        self
    }

    fn min_dim(mut self, dim: usize) -> Self {
        self.accepts = Accepts::MinDim(dim);
        self
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    /// Whether the handle is defined on `shape`.
    pub fn accepts(&self, shape: MatrixShape) -> bool {
        match self.accepts {
            Accepts::Any => true,
            Accepts::Exactly(s) => s == shape,
            Accepts::MinDim(d) => shape.dim() >= d,
        }
    }

    /// The shape the handle natively lives on, or 2x2 when it accepts several.
    pub fn default_shape(&self) -> MatrixShape {
        match self.accepts {
            Accepts::Exactly(s) => s,
            _ => MatrixShape::new(2, 2).expect("2x2 is valid"),
        }
    }

    pub fn eval(&self, x: &MatrixPoint) -> f64 {
        (self.eval)(x)
    }

    /// A scaled copy `s f` (flags are kept for `s > 0`).
    pub fn scaled(&self, s: f64) -> FunctionHandle {
        let eval = self.eval.clone();
        let grad = self.gradient.clone();
        FunctionHandle {
            name: format!("{}*{}", s, self.name),
            accepts: self.accepts,
            eval: Arc::new(move |x| s * eval(x)),
            gradient: grad.map(|g| -> Gradient { Arc::new(move |x| g(x).map(|v| &v * s)) }),
            flags: if s > 0.0 { self.flags } else { Flags::NONE },
        }
    }
}

impl ScalarFunction for FunctionHandle {
    fn name(&self) -> &str {
        &self.name
    }

    fn value(&self, x: &MatrixPoint) -> Option<f64> {
        self.accepts(x.shape).then(|| (self.eval)(x))
    }

    fn gradient(&self, x: &MatrixPoint) -> Option<MatrixPoint> {
        if !self.accepts(x.shape) {
            return None;
        }
        self.gradient.as_ref().and_then(|g| g(x))
    }
}

fn weighted(x: &MatrixPoint) -> MatrixPoint {
    let mut g = x.clone();
    for (k, c) in g.coords_mut().iter_mut().enumerate() {
        *c *= x.shape.frobenius_weight(k);
    }
    g
}

fn half_norm_sq(name: &str, a0: f64) -> FunctionHandle {
    FunctionHandle::new(name, Flags::CONVEX, move |x| 0.5 * a0 * x.norm_sq())
        .with_gradient(move |x| Some(&weighted(x) * a0))
}

/// `max_k l_k . x` over the given linear functionals (coordinate pairing).
pub fn max_linear(name: impl Into<String>, functionals: Vec<MatrixPoint>) -> FunctionHandle {
    assert!(!functionals.is_empty(), "max_linear needs at least one functional");
    let shape = functionals[0].shape;
    let flags = Flags {
        rank_one_affine: functionals.len() == 1,
        ..Flags::CONVEX
    };
    let ls = Arc::new(functionals);
    let ls_grad = ls.clone();
    FunctionHandle::new(name, flags, move |x| {
        ls.iter().map(|l| l.dot(x)).fold(f64::NEG_INFINITY, f64::max)
    })
    .with_gradient(move |x| {
        let vals: Vec<f64> = ls_grad.iter().map(|l| l.dot(x)).collect();
        let best = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut winners = vals.iter().enumerate().filter(|(_, v)| **v == best);
        let (first, _) = winners.next()?;
        if winners.any(|(j, _)| ls_grad[j] != ls_grad[first]) {
            return None;
        }
        Some(ls_grad[first].clone())
    })
    .only(shape)
}

fn sign(v: f64) -> Option<f64> {
    if v > 0.0 {
        Some(1.0)
    } else if v < 0.0 {
        Some(-1.0)
    } else {
        None
    }
}

/// The analytic test-function corpus in a stable order.
pub fn corpus() -> Vec<FunctionHandle> {
    let m22 = MatrixShape::new(2, 2).expect("2x2");
    let m12 = MatrixShape::new(1, 2).expect("1x2");
    let dense22 = move |v: [f64; 4]| MatrixPoint::from_dense(m22, &v).expect("2x2 data");

    let linear_coeffs = [1.0, -0.5, 0.25, 0.75, -1.0, 0.5];
    let linear = FunctionHandle::new(
        "linear",
        Flags {
            rank_one_affine: true,
            ..Flags::CONVEX
        },
        move |x| {
            x.coords()
                .iter()
                .zip(linear_coeffs.iter().cycle())
                .map(|(c, l)| c * l)
                .sum()
        },
    )
    .with_gradient(move |x| {
        let coords = linear_coeffs.iter().cycle().take(x.shape.dim()).cloned().collect();
        MatrixPoint::from_coords(x.shape, coords).ok()
    })
    .min_dim(1);

    let neg_det = FunctionHandle::new(
        "neg_det_2x2",
        Flags {
            convex: false,
            rank_one_convex: true,
            separately_convex: true,
            rank_one_affine: true,
        },
        |x| -x.det2(),
    )
    .with_gradient(move |x| {
        let (a, b, c, d) = (x.get(0, 0), x.get(0, 1), x.get(1, 0), x.get(1, 1));
        Some(dense22([-d, c, b, -a]))
    })
    .only(m22);

    let abs_det = FunctionHandle::new(
        "abs_det_2x2",
        Flags {
            convex: false,
            rank_one_convex: true,
            separately_convex: true,
            rank_one_affine: false,
        },
        |x| x.det2().abs(),
    )
    .with_gradient(move |x| {
        let s = sign(x.det2())?;
        let (a, b, c, d) = (x.get(0, 0), x.get(0, 1), x.get(1, 0), x.get(1, 1));
        Some(&dense22([d, -c, -b, a]) * s)
    })
    .only(m22);

    let neg_uv = FunctionHandle::new(
        "neg_uv",
        Flags {
            separately_convex: true,
            ..Flags::NONE
        },
        |x| -x.coords()[0] * x.coords()[1],
    )
    .with_gradient(move |x| {
        MatrixPoint::from_coords(m12, vec![-x.coords()[1], -x.coords()[0]]).ok()
    })
    .only(m12);

    let norm = FunctionHandle::new("norm", Flags::CONVEX, |x| x.norm()).with_gradient(|x| {
        let n = x.norm();
        (n > 0.0).then(|| &weighted(x) * (1.0 / n))
    });

    let abs_x11 = FunctionHandle::new("abs_x11", Flags::CONVEX, |x| x.coords()[0].abs())
        .with_gradient(|x| {
            let mut g = MatrixPoint::zeros(x.shape);
            g.coords_mut()[0] = sign(x.coords()[0])?;
            Some(g)
        });

    let l1 = FunctionHandle::new("l1_norm", Flags::CONVEX, |x| {
        x.coords().iter().map(|c| c.abs()).sum()
    })
    .with_gradient(|x| {
        let coords = x
            .coords()
            .iter()
            .map(|c| sign(*c))
            .collect::<Option<Vec<_>>>()?;
        MatrixPoint::from_coords(x.shape, coords).ok()
    });

    let neg_half = FunctionHandle::new("neg_half_norm_sq", Flags::NONE, |x| -0.5 * x.norm_sq())
        .with_gradient(|x| Some(-&weighted(x)));

    let cubic = FunctionHandle::new("cubic_x11", Flags::NONE, |x| x.coords()[0].powi(3))
        .with_gradient(|x| {
            let mut g = MatrixPoint::zeros(x.shape);
            g.coords_mut()[0] = 3.0 * x.coords()[0].powi(2);
            Some(g)
        });

    let saddle = FunctionHandle::new("saddle_x11_x12", Flags::NONE, |x| {
        x.coords()[0].powi(2) - x.coords()[1].powi(2)
    })
    .with_gradient(|x| {
        let mut g = MatrixPoint::zeros(x.shape);
        g.coords_mut()[0] = 2.0 * x.coords()[0];
        g.coords_mut()[1] = -2.0 * x.coords()[1];
        Some(g)
    })
    .min_dim(2);

    let polyhedral = max_linear(
        "max_linear_3",
        vec![
            dense22([1.0, 0.0, 0.0, 0.5]),
            dense22([-0.5, 1.0, 0.0, 0.0]),
            dense22([0.0, -1.0, 0.5, -1.0]),
        ],
    );

    vec![
        half_norm_sq("half_norm_sq_0.5", 0.5),
        half_norm_sq("half_norm_sq", 1.0),
        half_norm_sq("half_norm_sq_2", 2.0),
        norm,
        polyhedral,
        neg_det,
        abs_det,
        neg_half,
        neg_uv,
        abs_x11,
        l1,
        linear,
        cubic,
        saddle,
    ]
}

/// Looks up a corpus entry by name.
pub fn find(name: &str) -> Option<FunctionHandle> {
    corpus().into_iter().find(|f| f.name == name)
}
