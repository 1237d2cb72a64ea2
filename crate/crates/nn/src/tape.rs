use crate::error::NnError;
use crate::ops::activation::{self, Activation};
use crate::ops::conv::{self, Padding};
use crate::ops::dense;
use crate::ops::dropout;
use crate::ops::loss;
use crate::ops::lstm::{self, LstmSaved};
use crate::ops::pool;
use crate::params::{ParamId, ParamStore};
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use rand::Rng;

/// Handle to a value recorded on a [`Tape`]. `slot` is 0 for every op except
/// the LSTM step, whose cell state lives in slot 1 of the same node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValueId {
    node: u32,
    slot: u8,
}

/// The four gate weight matrices and biases of one LSTM layer, in the fixed
/// order forget, input, candidate, output.
#[derive(Debug, Clone, Copy)]
pub struct LstmParamIds {
    pub ws: [ParamId; 4],
    pub bs: [ParamId; 4],
}

enum NodeOp<T> {
    /// External input or carried-over state; gradients stop here.
    Leaf,
    Conv {
        x: ValueId,
        w: ParamId,
        b: ParamId,
        padding: Padding,
    },
    Pool {
        x: ValueId,
        argmax: Vec<u32>,
    },
    Dense {
        x: ValueId,
        w: ParamId,
        b: ParamId,
    },
    Act {
        x: ValueId,
        kind: Activation,
    },
    Lstm {
        x: ValueId,
        h_prev: ValueId,
        c_prev: ValueId,
        params: LstmParamIds,
        saved: LstmSaved<T>,
    },
    Concat {
        xs: Vec<ValueId>,
    },
    Dropout {
        x: ValueId,
        mask: Tensor<T>,
    },
    ScaleShift {
        x: ValueId,
        w: ParamId,
        c: ParamId,
    },
    Mse {
        x: ValueId,
        target: Vec<u8>,
        weights: Option<Tensor<T>>,
    },
    Mean {
        xs: Vec<ValueId>,
    },
    Flatten {
        x: ValueId,
        original: Vec<usize>,
    },
}

struct Node<T> {
    op: NodeOp<T>,
    value: Tensor<T>,
    /// Second output, used only by the LSTM step for its cell state.
    value2: Option<Tensor<T>>,
    grad: Option<Tensor<T>>,
    grad2: Option<Tensor<T>>,
}

/// Append-only record of one forward computation. Parameters are referenced
/// by id into an external [`ParamStore`], so recording a window of steps
/// never copies weights. `backward` walks the record once in reverse and
/// then refuses to run again.
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
    consumed: bool,
}

fn accumulate<T: Scalar>(slot: &mut Option<Tensor<T>>, g: Tensor<T>) {
    match slot {
        None => *slot = Some(g),
        Some(existing) => existing.add_assign(&g),
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            consumed: false,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: NodeOp<T>, value: Tensor<T>, value2: Option<Tensor<T>>) -> ValueId {
        self.nodes.push(Node {
            op,
            value,
            value2,
            grad: None,
            grad2: None,
        });
        ValueId {
            node: (self.nodes.len() - 1) as u32,
            slot: 0,
        }
    }

    pub fn value(&self, id: ValueId) -> &Tensor<T> {
        let node = &self.nodes[id.node as usize];
        match id.slot {
            0 => &node.value,
            _ => node.value2.as_ref().expect("slot 1 only on LSTM nodes"),
        }
    }

    /// Gradient accumulated at `id` by the last `backward` call.
    pub fn grad(&self, id: ValueId) -> Option<&Tensor<T>> {
        let node = &self.nodes[id.node as usize];
        match id.slot {
            0 => node.grad.as_ref(),
            _ => node.grad2.as_ref(),
        }
    }

    /// Record an external input. Gradients reaching a leaf accumulate there
    /// and go no further, which is what truncates backpropagation at window
    /// boundaries: carried state re-enters the next window as a leaf.
    pub fn leaf(&mut self, value: Tensor<T>) -> ValueId {
        self.push(NodeOp::Leaf, value, None)
    }

    pub fn conv2d(
        &mut self,
        ps: &ParamStore<T>,
        x: ValueId,
        w: ParamId,
        b: ParamId,
        padding: Padding,
    ) -> Result<ValueId, NnError> {
        let out = conv::forward(self.value(x), ps.value(w), ps.value(b), padding)?;
        Ok(self.push(NodeOp::Conv { x, w, b, padding }, out, None))
    }

    pub fn maxpool(&mut self, x: ValueId, ph: usize, pw: usize) -> Result<ValueId, NnError> {
        let (out, argmax) = pool::forward(self.value(x), ph, pw)?;
        Ok(self.push(NodeOp::Pool { x, argmax }, out, None))
    }

    pub fn dense(
        &mut self,
        ps: &ParamStore<T>,
        x: ValueId,
        w: ParamId,
        b: ParamId,
    ) -> Result<ValueId, NnError> {
        let out = dense::forward(self.value(x), ps.value(w), ps.value(b))?;
        Ok(self.push(NodeOp::Dense { x, w, b }, out, None))
    }

    pub fn activation(&mut self, x: ValueId, kind: Activation) -> ValueId {
        let out = activation::forward(self.value(x), kind);
        self.push(NodeOp::Act { x, kind }, out, None)
    }

    /// One LSTM step. Returns the hidden state and the cell state; both can
    /// feed later nodes and both collect gradients during backward.
    pub fn lstm_step(
        &mut self,
        ps: &ParamStore<T>,
        x: ValueId,
        h_prev: ValueId,
        c_prev: ValueId,
        params: LstmParamIds,
    ) -> Result<(ValueId, ValueId), NnError> {
        let ws = params.ws.map(|id| ps.value(id));
        let bs = params.bs.map(|id| ps.value(id));
        let (h, c, saved) = lstm::forward(
            self.value(x),
            self.value(h_prev),
            self.value(c_prev),
            ws,
            bs,
        )?;
        let h_id = self.push(
            NodeOp::Lstm {
                x,
                h_prev,
                c_prev,
                params,
                saved,
            },
            h,
            Some(c),
        );
        Ok((
            h_id,
            ValueId {
                node: h_id.node,
                slot: 1,
            },
        ))
    }

    /// Concatenate rank-1 values in the given order.
    pub fn concat(&mut self, xs: &[ValueId]) -> Result<ValueId, NnError> {
        if xs.is_empty() {
            return Err(NnError::Shape {
                op: "concat",
                detail: "no inputs".into(),
            });
        }
        let mut data = Vec::new();
        for &id in xs {
            let v = self.value(id);
            if v.rank() != 1 {
                return Err(NnError::Shape {
                    op: "concat",
                    detail: format!("inputs must be rank 1, got {:?}", v.shape()),
                });
            }
            data.extend_from_slice(v.data());
        }
        let n = data.len();
        let out = Tensor::from_vec(&[n], data)?;
        Ok(self.push(NodeOp::Concat { xs: xs.to_vec() }, out, None))
    }

    pub fn dropout<R: Rng>(
        &mut self,
        x: ValueId,
        rate: f64,
        rng: &mut R,
    ) -> Result<ValueId, NnError> {
        let (out, mask) = dropout::forward(self.value(x), rate, rng)?;
        Ok(self.push(NodeOp::Dropout { x, mask }, out, None))
    }

    pub fn scale_shift(
        &mut self,
        ps: &ParamStore<T>,
        x: ValueId,
        w: ParamId,
        c: ParamId,
    ) -> Result<ValueId, NnError> {
        let out = loss::scale_shift_forward(self.value(x), ps.value(w), ps.value(c))?;
        Ok(self.push(NodeOp::ScaleShift { x, w, c }, out, None))
    }

    pub fn mse(
        &mut self,
        x: ValueId,
        target: &[u8],
        weights: Option<Tensor<T>>,
    ) -> Result<ValueId, NnError> {
        let out = loss::mse_forward(self.value(x), target, weights.as_ref())?;
        Ok(self.push(
            NodeOp::Mse {
                x,
                target: target.to_vec(),
                weights,
            },
            out,
            None,
        ))
    }

    /// Mean of scalar values, used to pool per-second losses over a window.
    pub fn mean(&mut self, xs: &[ValueId]) -> Result<ValueId, NnError> {
        if xs.is_empty() {
            return Err(NnError::Shape {
                op: "mean",
                detail: "no inputs".into(),
            });
        }
        let mut acc = T::zero();
        for &id in xs {
            let v = self.value(id);
            if v.len() != 1 {
                return Err(NnError::Shape {
                    op: "mean",
                    detail: format!("inputs must be scalar, got {:?}", v.shape()),
                });
            }
            acc += v.item();
        }
        let out = Tensor::scalar(acc / T::of(xs.len() as f64));
        Ok(self.push(NodeOp::Mean { xs: xs.to_vec() }, out, None))
    }

    /// Reshape to rank 1 without changing element order.
    pub fn flatten(&mut self, x: ValueId) -> ValueId {
        let v = self.value(x);
        let original = v.shape().to_vec();
        let out = v.clone().into_flat();
        self.push(NodeOp::Flatten { x, original }, out, None)
    }

    /// Reverse pass from `root`, which must hold a single element. Returns
    /// per-parameter gradients indexed by `ParamId`; `None` for parameters
    /// the loss never touched. Leaf and intermediate gradients stay on the
    /// tape for inspection via [`Tape::grad`].
    pub fn backward(
        &mut self,
        ps: &ParamStore<T>,
        root: ValueId,
    ) -> Result<Vec<Option<Tensor<T>>>, NnError> {
        if self.consumed {
            return Err(NnError::State {
                detail: "backward already ran on this tape".into(),
            });
        }
        self.consumed = true;
        if self.value(root).len() != 1 {
            return Err(NnError::Shape {
                op: "backward",
                detail: format!(
                    "root must hold a single element, got {:?}",
                    self.value(root).shape()
                ),
            });
        }

        let seed = Tensor::filled(self.value(root).shape(), T::one());
        {
            let node = &mut self.nodes[root.node as usize];
            match root.slot {
                0 => node.grad = Some(seed),
                _ => node.grad2 = Some(seed),
            }
        }

        let mut param_grads: Vec<Option<Tensor<T>>> = (0..ps.len()).map(|_| None).collect();

        for idx in (0..self.nodes.len()).rev() {
            let (earlier, rest) = self.nodes.split_at_mut(idx);
            let node = &mut rest[0];
            let grad = node.grad.take();
            let grad2 = node.grad2.take();
            if grad.is_none() && grad2.is_none() {
                continue;
            }
            // Restore for later inspection; backward reads the local copies.
            node.grad = grad.clone();
            node.grad2 = grad2.clone();

            let into = |earlier: &mut [Node<T>], id: ValueId, g: Tensor<T>| {
                let target = &mut earlier[id.node as usize];
                match id.slot {
                    0 => accumulate(&mut target.grad, g),
                    _ => accumulate(&mut target.grad2, g),
                }
            };

            match &node.op {
                NodeOp::Leaf => {}
                NodeOp::Conv { x, w, b, padding } => {
                    let g = grad.expect("conv output gradient");
                    let grads =
                        conv::backward(&earlier[x.node as usize].value, ps.value(*w), *padding, &g)?;
                    into(earlier, *x, grads.input);
                    accumulate(&mut param_grads[w.index()], grads.kernels);
                    accumulate(&mut param_grads[b.index()], grads.bias);
                }
                NodeOp::Pool { x, argmax } => {
                    let g = grad.expect("pool output gradient");
                    let shape = earlier[x.node as usize].value.shape().to_vec();
                    into(earlier, *x, pool::backward(&shape, argmax, &g));
                }
                NodeOp::Dense { x, w, b } => {
                    let g = grad.expect("dense output gradient");
                    let grads = dense::backward(&earlier[x.node as usize].value, ps.value(*w), &g);
                    into(earlier, *x, grads.input);
                    accumulate(&mut param_grads[w.index()], grads.weight);
                    accumulate(&mut param_grads[b.index()], grads.bias);
                }
                NodeOp::Act { x, kind } => {
                    let g = grad.expect("activation output gradient");
                    let dx =
                        activation::backward(&earlier[x.node as usize].value, &node.value, *kind, &g);
                    into(earlier, *x, dx);
                }
                NodeOp::Lstm {
                    x,
                    h_prev,
                    c_prev,
                    params,
                    saved,
                } => {
                    let hd = node.value.len();
                    let dh = grad.unwrap_or_else(|| Tensor::zeros(&[hd]));
                    let dc = grad2.unwrap_or_else(|| Tensor::zeros(&[hd]));
                    let ws = params.ws.map(|id| ps.value(id));
                    let grads = lstm::backward(
                        &earlier[x.node as usize].value,
                        &earlier[h_prev.node as usize].value,
                        value_at(earlier, *c_prev),
                        ws,
                        saved,
                        &dh,
                        &dc,
                    );
                    into(earlier, *x, grads.x);
                    into(earlier, *h_prev, grads.h_prev);
                    into(earlier, *c_prev, grads.c_prev);
                    for g in 0..4 {
                        accumulate(&mut param_grads[params.ws[g].index()], grads.ws[g].clone());
                        accumulate(&mut param_grads[params.bs[g].index()], grads.bs[g].clone());
                    }
                }
                NodeOp::Concat { xs } => {
                    let g = grad.expect("concat output gradient");
                    let mut offset = 0;
                    for &id in xs {
                        let len = value_at(earlier, id).len();
                        let piece =
                            Tensor::from_vec(&[len], g.data()[offset..offset + len].to_vec())?;
                        into(earlier, id, piece);
                        offset += len;
                    }
                }
                NodeOp::Dropout { x, mask } => {
                    let g = grad.expect("dropout output gradient");
                    into(earlier, *x, dropout::backward(mask, &g));
                }
                NodeOp::ScaleShift { x, w, c } => {
                    let g = grad.expect("scale_shift output gradient");
                    let grads = loss::scale_shift_backward(
                        &earlier[x.node as usize].value,
                        ps.value(*w),
                        &g,
                    );
                    into(earlier, *x, grads.input);
                    accumulate(&mut param_grads[w.index()], grads.w);
                    accumulate(&mut param_grads[c.index()], grads.c);
                }
                NodeOp::Mse { x, target, weights } => {
                    let g = grad.expect("loss gradient").item();
                    let dx = loss::mse_backward(
                        &earlier[x.node as usize].value,
                        target,
                        weights.as_ref(),
                        g,
                    );
                    into(earlier, *x, dx);
                }
                NodeOp::Mean { xs } => {
                    let g = grad.expect("mean gradient").item();
                    let share = g / T::of(xs.len() as f64);
                    for &id in xs {
                        into(earlier, id, Tensor::scalar(share));
                    }
                }
                NodeOp::Flatten { x, original } => {
                    let g = grad.expect("flatten gradient");
                    let reshaped = Tensor::from_vec(original, g.into_data())?;
                    into(earlier, *x, reshaped);
                }
            }
        }

        Ok(param_grads)
    }
}

/// Value lookup inside the mutable-split backward walk, where slot-1 reads
/// must go through `value2`.
fn value_at<'a, T: Scalar>(nodes: &'a [Node<T>], id: ValueId) -> &'a Tensor<T> {
    let node = &nodes[id.node as usize];
    match id.slot {
        0 => &node.value,
        _ => node.value2.as_ref().expect("slot 1 only on LSTM nodes"),
    }
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::Activation;

    fn store_with(entries: &[(&str, &[usize], &[f64])]) -> (ParamStore<f64>, Vec<ParamId>) {
        let mut ps = ParamStore::new();
        let mut ids = Vec::new();
        for (name, shape, data) in entries {
            let t = Tensor::from_vec(shape, data.to_vec()).unwrap();
            ids.push(ps.register(name, t).unwrap());
        }
        (ps, ids)
    }

    #[test]
    fn dense_mse_gradient_has_closed_form() {
        // L = (1/N) sum (Wx + b - g)^2; dL/dW = (2/N)(o - g) x^T.
        let (ps, ids) = store_with(&[
            ("w", &[2, 2], &[1.0, 0.0, 0.0, 1.0]),
            ("b", &[2], &[0.0, 0.0]),
        ]);
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::from_vec(&[2], vec![0.5, -0.5]).unwrap());
        let y = tape.dense(&ps, x, ids[0], ids[1]).unwrap();
        let l = tape.mse(y, &[1, 0], None).unwrap();
        let grads = tape.backward(&ps, l).unwrap();
        // o = x, residual = (-0.5, -0.5), scale 2/2 = 1.
        let dw = grads[0].as_ref().unwrap();
        assert_eq!(dw.data(), [-0.25, 0.25, -0.25, 0.25]);
        let db = grads[1].as_ref().unwrap();
        assert_eq!(db.data(), [-0.5, -0.5]);
    }

    #[test]
    fn off_path_parameter_gets_no_gradient() {
        let (ps, ids) = store_with(&[
            ("w", &[1, 1], &[2.0]),
            ("b", &[1], &[0.0]),
            ("unused", &[3], &[1.0, 2.0, 3.0]),
        ]);
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::from_vec(&[1], vec![1.0]).unwrap());
        let y = tape.dense(&ps, x, ids[0], ids[1]).unwrap();
        let l = tape.mse(y, &[0], None).unwrap();
        let grads = tape.backward(&ps, l).unwrap();
        assert!(grads[0].is_some());
        assert!(grads[2].is_none());
    }

    #[test]
    fn second_backward_is_a_state_error() {
        let (ps, ids) = store_with(&[("w", &[1, 1], &[1.0]), ("b", &[1], &[0.0])]);
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::from_vec(&[1], vec![1.0]).unwrap());
        let y = tape.dense(&ps, x, ids[0], ids[1]).unwrap();
        let l = tape.mse(y, &[1], None).unwrap();
        tape.backward(&ps, l).unwrap();
        assert!(matches!(
            tape.backward(&ps, l),
            Err(NnError::State { .. })
        ));
    }

    #[test]
    fn non_scalar_root_is_rejected() {
        let ps = ParamStore::<f64>::new();
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::from_vec(&[2], vec![1.0, 2.0]).unwrap());
        assert!(matches!(
            tape.backward(&ps, x),
            Err(NnError::Shape { .. })
        ));
    }

    #[test]
    fn value_reused_twice_accumulates_both_gradients() {
        // y = concat(a, a); L = mean of squared error against zeros doubles
        // the gradient relative to using `a` once.
        let ps = ParamStore::<f64>::new();
        let mut tape = Tape::new();
        let a = tape.leaf(Tensor::from_vec(&[1], vec![3.0]).unwrap());
        let y = tape.concat(&[a, a]).unwrap();
        let l = tape.mse(y, &[0, 0], None).unwrap();
        tape.backward(&ps, l).unwrap();
        // dL/da through each slot: (2/2)*3 = 3; two slots sum to 6.
        assert_eq!(tape.grad(a).unwrap().data(), [6.0]);
    }

    #[test]
    fn lstm_cell_and_hidden_both_carry_gradient() {
        let d = 2;
        let hd = 3;
        let mut ps = ParamStore::<f64>::new();
        let mut ws = Vec::new();
        let mut bs = Vec::new();
        for g in 0..4 {
            let w = Tensor::filled(&[hd, d + hd], 0.1 * (g as f64 + 1.0));
            let b = Tensor::filled(&[hd], 0.05);
            ws.push(ps.register(&format!("w{g}"), w).unwrap());
            bs.push(ps.register(&format!("b{g}"), b).unwrap());
        }
        let params = LstmParamIds {
            ws: [ws[0], ws[1], ws[2], ws[3]],
            bs: [bs[0], bs[1], bs[2], bs[3]],
        };
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::from_vec(&[d], vec![0.4, -0.6]).unwrap());
        let h0 = tape.leaf(Tensor::zeros(&[hd]));
        let c0 = tape.leaf(Tensor::filled(&[hd], 0.2));
        let (h1, c1) = tape.lstm_step(&ps, x, h0, c0, params).unwrap();
        // Use both outputs so both slots receive gradient.
        let joined = tape.concat(&[h1, c1]).unwrap();
        let l = tape.mse(joined, &[0, 0, 0, 0, 0, 0], None).unwrap();
        let grads = tape.backward(&ps, l).unwrap();
        assert!(grads.iter().all(|g| g.is_some()));
        assert!(tape.grad(c0).is_some());
        assert!(tape.grad(x).is_some());
    }

    #[test]
    fn mean_distributes_gradient_evenly() {
        let ps = ParamStore::<f64>::new();
        let mut tape = Tape::new();
        let a = tape.leaf(Tensor::from_vec(&[1], vec![2.0]).unwrap());
        let b = tape.leaf(Tensor::from_vec(&[1], vec![4.0]).unwrap());
        let m = tape.mean(&[a, b]).unwrap();
        assert_eq!(tape.value(m).item(), 3.0);
        tape.backward(&ps, m).unwrap();
        assert_eq!(tape.grad(a).unwrap().item(), 0.5);
        assert_eq!(tape.grad(b).unwrap().item(), 0.5);
    }

    #[test]
    fn flatten_round_trips_gradient_shape() {
        let ps = ParamStore::<f64>::new();
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::filled(&[1, 1, 4], 0.5));
        let f = tape.flatten(x);
        let l = tape.mse(f, &[0, 0, 0, 0], None).unwrap();
        tape.backward(&ps, l).unwrap();
        assert_eq!(tape.grad(x).unwrap().shape(), [1, 1, 4]);
    }

    #[test]
    fn activation_chain_matches_manual_derivative() {
        let ps = ParamStore::<f64>::new();
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::from_vec(&[1], vec![0.3]).unwrap());
        let s = tape.activation(x, Activation::Sigmoid);
        let l = tape.mse(s, &[0], None).unwrap();
        tape.backward(&ps, l).unwrap();
        let y = 1.0 / (1.0 + (-0.3f64).exp());
        let expect = 2.0 * y * y * (1.0 - y);
        assert!((tape.grad(x).unwrap().item() - expect).abs() < 1e-12);
    }
}
