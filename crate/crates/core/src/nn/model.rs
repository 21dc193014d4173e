use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dropout::Mode;
use super::layer::{Layer, LayerCache, LayerSpec, Param, ParamRole};
use super::{NnError, Tensor};

/// Ordered layer stack. Parameters live in the layers, keyed by
/// `(layer index, role)`; [`Gradients`] mirrors them buffer for buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub name: String,
    input_shape: Vec<usize>,
    layers: Vec<Layer>,
}

/// Gradient store with exactly the parameter shapes of its model.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub(crate) buffers: Vec<Vec<Vec<f64>>>,
}

/// Activation caches of one forward pass, consumed by [`Model::backward`].
#[derive(Debug)]
pub struct Trace {
    caches: Vec<LayerCache>,
}

impl Model {
    /// Checks that every layer's output shape feeds the next and returns the
    /// chain of shapes, input first.
    pub fn shape_chain(input_shape: &[usize], specs: &[LayerSpec]) -> Result<Vec<Vec<usize>>, NnError> {
        let mut shapes = vec![input_shape.to_vec()];
        for spec in specs {
            spec.validate()?;
            let next = spec.output_shape(shapes.last().expect("nonempty"))?;
            shapes.push(next);
        }
        Ok(shapes)
    }

    /// Builds a model with Glorot-uniform weights, zero biases, and LSTM
    /// forget-gate biases of one.
    pub fn new(name: impl Into<String>, input_shape: Vec<usize>, specs: Vec<LayerSpec>, seed: u64) -> Result<Self, NnError> {
        Model::shape_chain(&input_shape, &specs)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = specs
            .into_iter()
            .map(|spec| {
                let mut layer = Layer::zeroed(spec);
                init_layer(&mut layer, &mut rng);
                layer
            })
            .collect();
        Ok(Model {
            name: name.into(),
            input_shape,
            layers,
        })
    }

    /// Assembles a model from already-populated layers, checking shapes.
    pub fn from_layers(name: impl Into<String>, input_shape: Vec<usize>, layers: Vec<Layer>) -> Result<Self, NnError> {
        let specs: Vec<LayerSpec> = layers.iter().map(|l| l.spec.clone()).collect();
        Model::shape_chain(&input_shape, &specs)?;
        for layer in &layers {
            let expected = layer.spec.param_shapes();
            let ok = expected.len() == layer.params.len()
                && expected.iter().zip(&layer.params).all(|((role, shape), p)| {
                    *role == p.role && *shape == p.shape && p.values.len() == shape.iter().product::<usize>()
                });
            if !ok {
                return Err(NnError::InvalidSpec(format!("{} layer parameters do not match its spec", layer.spec.kind())));
            }
        }
        Ok(Model {
            name: name.into(),
            input_shape,
            layers,
        })
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec.clone()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().flat_map(|l| &l.params).map(|p| p.values.len()).sum()
    }

    /// `("{layer}.{role}", param)` for every array in storage order.
    pub fn named_params(&self) -> impl Iterator<Item = (String, &Param)> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(i, l)| l.params.iter().map(move |p| (format!("{i}.{}", p.role), p)))
    }

    pub fn param_mut(&mut self, layer: usize, role: ParamRole) -> Option<&mut Param> {
        self.layers.get_mut(layer)?.params.iter_mut().find(|p| p.role == role)
    }

    pub(crate) fn param_buffers_mut(&mut self) -> impl Iterator<Item = &mut Vec<f64>> {
        self.layers.iter_mut().flat_map(|l| l.params.iter_mut().map(|p| &mut p.values))
    }

    pub fn zero_grads(&self) -> Gradients {
        Gradients {
            buffers: self
                .layers
                .iter()
                .map(|l| l.params.iter().map(|p| vec![0.0; p.values.len()]).collect())
                .collect(),
        }
    }

    pub fn forward<R: Rng + ?Sized>(&self, x: &Tensor, mode: Mode, rng: &mut R) -> Result<(Tensor, Trace), NnError> {
        x.expect_shape(&self.input_shape)?;
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut current = x.clone();
        for layer in &self.layers {
            let (y, cache) = layer.forward(&current, mode, rng)?;
            caches.push(cache);
            current = y;
        }
        Ok((current, Trace { caches }))
    }

    /// Evaluation-mode forward pass without a trace.
    pub fn predict(&self, x: &Tensor) -> Result<Tensor, NnError> {
        x.expect_shape(&self.input_shape)?;
        // eval mode never draws from the rng
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut current = x.clone();
        for layer in &self.layers {
            current = layer.forward(&current, Mode::Eval, &mut rng)?.0;
        }
        Ok(current)
    }

    /// Accumulates parameter gradients into `grads`; returns `dL/dx`.
    pub fn backward(&self, trace: &Trace, grad_out: &Tensor, grads: &mut Gradients) -> Result<Tensor, NnError> {
        if trace.caches.len() != self.layers.len() || grads.buffers.len() != self.layers.len() {
            return Err(NnError::InvalidSpec("trace or gradients belong to another model".into()));
        }
        let mut g = grad_out.clone();
        for ((layer, cache), buf) in self.layers.iter().zip(&trace.caches).zip(grads.buffers.iter_mut()).rev() {
            g = layer.backward(cache, &g, buf)?;
        }
        Ok(g)
    }
}

impl Gradients {
    pub fn layer(&self, index: usize) -> &[Vec<f64>] {
        &self.buffers[index]
    }

    pub fn flat(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.buffers.iter().flatten()
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.buffers.iter_mut().flatten().zip(other.buffers.iter().flatten()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.buffers.iter_mut().flatten().flatten().for_each(|v| *v *= factor);
    }

    pub fn zero(&mut self) {
        self.buffers.iter_mut().flatten().flatten().for_each(|v| *v = 0.0);
    }

    pub fn is_finite(&self) -> bool {
        self.buffers.iter().flatten().flatten().all(|v| v.is_finite())
    }
}

fn glorot<R: Rng>(values: &mut [f64], fan_in: usize, fan_out: usize, rng: &mut R) {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for v in values {
        *v = rng.gen_range(-limit..limit);
    }
}

fn init_layer<R: Rng>(layer: &mut Layer, rng: &mut R) {
    let spec = layer.spec.clone();
    for p in &mut layer.params {
        match (p.role, &spec) {
            (ParamRole::Weight, LayerSpec::Dense { input, output, .. }) => glorot(&mut p.values, *input, *output, rng),
            (ParamRole::InputHidden | ParamRole::ReverseInputHidden, _) => {
                let (rows, cols) = (p.shape[0], p.shape[1]);
                glorot(&mut p.values, cols, rows, rng)
            }
            (ParamRole::HiddenHidden | ParamRole::ReverseHiddenHidden, _) => {
                let (rows, cols) = (p.shape[0], p.shape[1]);
                glorot(&mut p.values, cols, rows, rng)
            }
            (ParamRole::GateBias | ParamRole::ReverseGateBias, _) => {
                let hidden = p.values.len() / 4;
                p.values.iter_mut().for_each(|v| *v = 0.0);
                p.values[hidden..2 * hidden].iter_mut().for_each(|v| *v = 1.0);
            }
            (ParamRole::Kernel, LayerSpec::Conv1d { in_channels, out_channels, kernel_size, .. }) => {
                glorot(&mut p.values, kernel_size * in_channels, kernel_size * out_channels, rng)
            }
            _ => p.values.iter_mut().for_each(|v| *v = 0.0),
        }
    }
}
