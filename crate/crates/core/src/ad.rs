//! A small reverse-mode automatic differentiation tape.
//!
//! Each arithmetic operation on a [`Var`] appends one node holding the local
//! partial derivatives with respect to at most two parents. A single backward
//! sweep then yields the gradient of one output with respect to every input.

use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::ops::{Add, Div, Mul, Neg, Sub};

use crate::math::Real;

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Node {
    a: u32,
    da: f64,
    b: u32,
    db: f64,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            nodes: RefCell::new(Vec::with_capacity(n)),
        }
    }

    /// Registers an independent variable.
    pub fn var(&self, value: f64) -> Var<'_> {
        let idx = self.push(Node {
            a: NONE,
            da: 0.0,
            b: NONE,
            db: 0.0,
        });
        Var {
            tape: Some(self),
            idx,
            val: value,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Drops every recorded node so the allocation can be reused.
    pub fn clear(&mut self) {
        self.nodes.get_mut().clear();
    }

    fn push(&self, node: Node) -> u32 {
        let mut nodes = self.nodes.borrow_mut();
        let idx = nodes.len() as u32;
        nodes.push(node);
        idx
    }

    /// Adjoint of every recorded node for the given output.
    pub fn adjoints(&self, output: Var<'_>) -> Vec<f64> {
        let nodes = self.nodes.borrow();
        let mut adj = vec![0.0; nodes.len()];
        if output.idx == NONE {
            return adj;
        }
        adj[output.idx as usize] = 1.0;
        for i in (0..=output.idx as usize).rev() {
            let g = adj[i];
            if g == 0.0 {
                continue;
            }
            let n = nodes[i];
            if n.a != NONE {
                adj[n.a as usize] += n.da * g;
            }
            if n.b != NONE {
                adj[n.b as usize] += n.db * g;
            }
        }
        adj
    }

    /// Gradient of `output` with respect to `inputs`.
    pub fn gradient(&self, output: Var<'_>, inputs: &[Var<'_>]) -> Vec<f64> {
        let adj = self.adjoints(output);
        inputs
            .iter()
            .map(|v| if v.idx == NONE { 0.0 } else { adj[v.idx as usize] })
            .collect()
    }
}

/// A value recorded on a [`Tape`]. Constants carry no tape and no index.
#[derive(Debug, Clone, Copy)]
pub struct Var<'t> {
    tape: Option<&'t Tape>,
    idx: u32,
    val: f64,
}

impl<'t> Var<'t> {
    pub fn constant(val: f64) -> Self {
        Var {
            tape: None,
            idx: NONE,
            val,
        }
    }

    fn unary(self, val: f64, d: f64) -> Self {
        match self.tape {
            Some(tape) if self.idx != NONE => {
                let idx = tape.push(Node {
                    a: self.idx,
                    da: d,
                    b: NONE,
                    db: 0.0,
                });
                Var {
                    tape: Some(tape),
                    idx,
                    val,
                }
            }
            _ => Var::constant(val),
        }
    }

    fn binary(self, rhs: Self, val: f64, da: f64, db: f64) -> Self {
        let tape = self.tape.or(rhs.tape);
        match tape {
            Some(tape) if self.idx != NONE || rhs.idx != NONE => {
                let idx = tape.push(Node {
                    a: self.idx,
                    da,
                    b: rhs.idx,
                    db,
                });
                Var {
                    tape: Some(tape),
                    idx,
                    val,
                }
            }
            _ => Var::constant(val),
        }
    }
}

impl Add for Var<'_> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.binary(rhs, self.val + rhs.val, 1.0, 1.0)
    }
}

impl Sub for Var<'_> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.binary(rhs, self.val - rhs.val, 1.0, -1.0)
    }
}

impl Mul for Var<'_> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.binary(rhs, self.val * rhs.val, rhs.val, self.val)
    }
}

impl Div for Var<'_> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let q = self.val / rhs.val;
        self.binary(rhs, q, 1.0 / rhs.val, -q / rhs.val)
    }
}

impl Neg for Var<'_> {
    type Output = Self;
    fn neg(self) -> Self {
        self.unary(-self.val, -1.0)
    }
}

impl Add<f64> for Var<'_> {
    type Output = Self;
    fn add(self, rhs: f64) -> Self {
        self.unary(self.val + rhs, 1.0)
    }
}

impl Sub<f64> for Var<'_> {
    type Output = Self;
    fn sub(self, rhs: f64) -> Self {
        self.unary(self.val - rhs, 1.0)
    }
}

impl Mul<f64> for Var<'_> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.unary(self.val * rhs, rhs)
    }
}

impl Div<f64> for Var<'_> {
    type Output = Self;
    fn div(self, rhs: f64) -> Self {
        self.unary(self.val / rhs, 1.0 / rhs)
    }
}

impl Real for Var<'_> {
    fn cst(x: f64) -> Self {
        Var::constant(x)
    }
    fn value(self) -> f64 {
        self.val
    }
    fn sqrt(self) -> Self {
        let r = libm::sqrt(self.val);
        let d = if r > 0.0 { 0.5 / r } else { 0.0 };
        self.unary(r, d)
    }
    fn exp(self) -> Self {
        let e = libm::exp(self.val);
        self.unary(e, e)
    }
    fn ln(self) -> Self {
        self.unary(libm::log(self.val), 1.0 / self.val)
    }
    fn sin(self) -> Self {
        self.unary(libm::sin(self.val), libm::cos(self.val))
    }
    fn cos(self) -> Self {
        self.unary(libm::cos(self.val), -libm::sin(self.val))
    }
    fn tan(self) -> Self {
        let t = libm::tan(self.val);
        self.unary(t, 1.0 + t * t)
    }
    fn atan(self) -> Self {
        self.unary(libm::atan(self.val), 1.0 / (1.0 + self.val * self.val))
    }
    fn atan2(self, x: Self) -> Self {
        let (y, xv) = (self.val, x.val);
        let r2 = xv * xv + y * y;
        let (dy, dx) = if r2 > 0.0 { (xv / r2, -y / r2) } else { (0.0, 0.0) };
        self.binary(x, libm::atan2(y, xv), dy, dx)
    }
    fn abs(self) -> Self {
        if self.val < 0.0 {
            -self
        } else {
            self
        }
    }
}
