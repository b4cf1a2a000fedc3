//! Neural architectures over per-sample node features.
//!
//! A batch of `B` samples with one scalar feature per node is stacked
//! into a `(B·n) × 1` node-feature matrix; every message-passing layer
//! runs over that stack with the shared operator of the BK graph. The
//! readout concatenates all node embeddings in node-id order.

use rand::Rng;

use super::spec::{GnnLayerKind, ModelKind, ModelSpec};
use crate::error::{Error, Result};
use crate::graph::BkGraph;
use crate::nn::{
    Activation, DenseMatrix, GcnCache, GcnLayer, Gatv2Cache, Gatv2Layer, Linear, Mlp, MlpCache,
    Parameterized, Propagation,
};

#[derive(Debug, Clone, PartialEq)]
pub enum GnnLayer {
    Gcn(GcnLayer),
    Gatv2(Gatv2Layer),
}

impl GnnLayer {
    fn params(&self) -> Vec<&DenseMatrix> {
        match self {
            GnnLayer::Gcn(l) => l.params(),
            GnnLayer::Gatv2(l) => l.params(),
        }
    }

    fn params_mut(&mut self) -> Vec<&mut DenseMatrix> {
        match self {
            GnnLayer::Gcn(l) => l.params_mut(),
            GnnLayer::Gatv2(l) => l.params_mut(),
        }
    }

    fn param_names(&self) -> Vec<String> {
        match self {
            GnnLayer::Gcn(l) => l.param_names(),
            GnnLayer::Gatv2(l) => l.param_names(),
        }
    }
}

#[derive(Debug, Clone)]
enum LayerCache {
    Gcn(GcnCache),
    Gatv2(Gatv2Cache),
}

/// GNN branch, MLP branch and classifier; absent parts are skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    node_count: usize,
    operator: Option<Propagation>,
    gnn: Vec<GnnLayer>,
    mlp: Option<Mlp>,
    classifier: Option<Linear>,
}

/// Forward intermediates for [`Network::backward`].
#[derive(Debug, Clone)]
pub struct NetworkCache {
    batch: usize,
    /// Input of every GNN layer followed by the last layer's output.
    gnn_states: Vec<DenseMatrix>,
    gnn_caches: Vec<LayerCache>,
    mlp: Option<MlpCache>,
    features: Option<DenseMatrix>,
}

impl Network {
    /// Builds the architecture of a neural `spec` for `feature_dim` nodes.
    pub fn new<R: Rng + ?Sized>(
        spec: &ModelSpec,
        graph: Option<&BkGraph>,
        feature_dim: usize,
        classes: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mlp_dims = vec![spec.mlp_hidden_dim; spec.mlp_hidden_layers];
        let (operator, gnn) = match spec.message_passing() {
            Some(layer_kind) => {
                let g = graph.ok_or_else(|| Error::MissingGraph(spec.label()))?;
                if g.node_count() != feature_dim {
                    return Err(Error::Shape(format!(
                        "graph has {} nodes but samples have {feature_dim} features",
                        g.node_count()
                    )));
                }
                let operator = match layer_kind {
                    GnnLayerKind::Gcn => Propagation::gcn(g)?,
                    GnnLayerKind::Gatv2 => Propagation::neighborhoods(g),
                };
                let mut layers = Vec::with_capacity(spec.gnn_layers);
                let mut width = 1;
                for _ in 0..spec.gnn_layers {
                    layers.push(match layer_kind {
                        GnnLayerKind::Gcn => GnnLayer::Gcn(GcnLayer::new(width, spec.hidden_dim, rng)),
                        GnnLayerKind::Gatv2 => {
                            GnnLayer::Gatv2(Gatv2Layer::new(width, spec.hidden_dim, rng))
                        }
                    });
                    width = spec.hidden_dim;
                }
                (Some(operator), layers)
            }
            None => (None, Vec::new()),
        };
        let (mlp, classifier) = match spec.kind {
            ModelKind::Mlp => (Some(Mlp::new(feature_dim, &mlp_dims, Some(classes), rng)), None),
            ModelKind::Parallel => {
                let mlp = Mlp::new(feature_dim, &mlp_dims, None, rng);
                let width = feature_dim * spec.hidden_dim + mlp.out_dim(feature_dim);
                (Some(mlp), Some(Linear::new(width, classes, rng)))
            }
            ModelKind::Gcn | ModelKind::Gatv2 => {
                (None, Some(Linear::new(feature_dim * spec.hidden_dim, classes, rng)))
            }
            other => {
                return Err(Error::InvalidParam(format!(
                    "{} is not a neural model",
                    other.as_str()
                )))
            }
        };
        Ok(Network {
            node_count: feature_dim,
            operator,
            gnn,
            mlp,
            classifier,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Width of the concatenated GNN readout, 0 without a GNN branch.
    pub fn gnn_layers(&self) -> &[GnnLayer] {
        &self.gnn
    }

    pub fn readout_dim(&self) -> usize {
        self.gnn_width() * self.node_count
    }

    fn gnn_width(&self) -> usize {
        match self.gnn.last() {
            Some(GnnLayer::Gcn(l)) => l.out_dim(),
            Some(GnnLayer::Gatv2(l)) => l.out_dim(),
            None => 0,
        }
    }

    pub fn forward(&self, x: &DenseMatrix) -> Result<(DenseMatrix, NetworkCache)> {
        if x.cols() != self.node_count {
            return Err(Error::Shape(format!(
                "model expects {} features, got {}",
                self.node_count,
                x.cols()
            )));
        }
        let batch = x.rows();
        let mut parts = Vec::new();

        let mut gnn_states = Vec::new();
        let mut gnn_caches = Vec::new();
        if let Some(op) = &self.operator {
            gnn_states.push(x.clone().reshape(batch * self.node_count, 1)?);
            for layer in &self.gnn {
                let h = gnn_states.last().unwrap();
                let z = match layer {
                    GnnLayer::Gcn(l) => {
                        let (z, c) = l.forward(op, h)?;
                        gnn_caches.push(LayerCache::Gcn(c));
                        z
                    }
                    GnnLayer::Gatv2(l) => {
                        let (z, c) = l.forward(op, h)?;
                        gnn_caches.push(LayerCache::Gatv2(c));
                        z
                    }
                };
                gnn_states.push(Activation::Relu.apply(&z));
            }
            let readout = gnn_states
                .last()
                .unwrap()
                .clone()
                .reshape(batch, self.readout_dim())?;
            parts.push(readout);
        }

        let mut mlp_cache = None;
        if let Some(mlp) = &self.mlp {
            let (y, c) = mlp.forward(x)?;
            parts.push(y);
            mlp_cache = Some(c);
        }

        let (logits, features) = match &self.classifier {
            Some(cls) => {
                let refs: Vec<&DenseMatrix> = parts.iter().collect();
                let features = DenseMatrix::hconcat(&refs)?;
                (cls.forward(&features)?, Some(features))
            }
            None => (parts.pop().expect("network has a branch"), None),
        };
        let cache = NetworkCache {
            batch,
            gnn_states,
            gnn_caches,
            mlp: mlp_cache,
            features,
        };
        Ok((logits, cache))
    }

    /// Gradients of all parameters, in [`Parameterized::params`] order.
    pub fn backward(&self, cache: &NetworkCache, d_logits: &DenseMatrix) -> Result<Vec<DenseMatrix>> {
        let mut gnn_grads = Vec::new();
        let mut mlp_grads = Vec::new();
        let mut cls_grads = Vec::new();

        let (d_gnn, d_mlp) = match &self.classifier {
            Some(cls) => {
                let features = cache.features.as_ref().expect("classifier input cached");
                let (g, dx) = cls.backward(features, d_logits, true)?;
                cls_grads = g;
                let dx = dx.expect("input gradient requested");
                let mut widths = Vec::new();
                if self.operator.is_some() {
                    widths.push(self.readout_dim());
                }
                if let Some(mlp) = &self.mlp {
                    widths.push(mlp.out_dim(self.node_count));
                }
                let mut split = dx.hsplit(&widths)?.into_iter();
                let d_gnn = if self.operator.is_some() { split.next() } else { None };
                (d_gnn, split.next())
            }
            None => (None, Some(d_logits.clone())),
        };

        if let (Some(mlp), Some(d), Some(c)) = (&self.mlp, d_mlp, &cache.mlp) {
            mlp_grads = mlp.backward(c, &d, false)?.0;
        }

        if let (Some(op), Some(d)) = (&self.operator, d_gnn) {
            let rows = cache.batch * self.node_count;
            let mut upstream = d.reshape(rows, self.gnn_width())?;
            let mut per_layer = Vec::with_capacity(self.gnn.len());
            for (idx, layer) in self.gnn.iter().enumerate().rev() {
                let dz = Activation::Relu.backward(&cache.gnn_states[idx + 1], &upstream);
                let need = idx > 0;
                let (g, dx) = match (layer, &cache.gnn_caches[idx]) {
                    (GnnLayer::Gcn(l), LayerCache::Gcn(c)) => l.backward(op, c, &dz, need)?,
                    (GnnLayer::Gatv2(l), LayerCache::Gatv2(c)) => {
                        l.backward(op, &cache.gnn_states[idx], c, &dz, need)?
                    }
                    _ => unreachable!("cache kind follows layer kind"),
                };
                per_layer.push(g);
                if let Some(dx) = dx {
                    upstream = dx;
                }
            }
            per_layer.reverse();
            gnn_grads = per_layer.into_iter().flatten().collect();
        }

        gnn_grads.extend(mlp_grads);
        gnn_grads.extend(cls_grads);
        Ok(gnn_grads)
    }
}

impl Parameterized for Network {
    fn params(&self) -> Vec<&DenseMatrix> {
        let mut out: Vec<&DenseMatrix> = self.gnn.iter().flat_map(GnnLayer::params).collect();
        if let Some(m) = &self.mlp {
            out.extend(m.params());
        }
        if let Some(c) = &self.classifier {
            out.extend(c.params());
        }
        out
    }

    fn params_mut(&mut self) -> Vec<&mut DenseMatrix> {
        let mut out: Vec<&mut DenseMatrix> =
            self.gnn.iter_mut().flat_map(GnnLayer::params_mut).collect();
        if let Some(m) = &mut self.mlp {
            out.extend(m.params_mut());
        }
        if let Some(c) = &mut self.classifier {
            out.extend(c.params_mut());
        }
        out
    }

    fn param_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, layer) in self.gnn.iter().enumerate() {
            out.extend(layer.param_names().into_iter().map(|n| format!("gnn{i}.{n}")));
        }
        if let Some(m) = &self.mlp {
            out.extend(m.param_names().into_iter().map(|n| format!("mlp.{n}")));
        }
        if let Some(c) = &self.classifier {
            out.extend(c.param_names().into_iter().map(|n| format!("classifier.{n}")));
        }
        out
    }
}
