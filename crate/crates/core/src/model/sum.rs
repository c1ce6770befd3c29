use std::sync::Arc;

use super::vector::{StepVector, SummandPart};
use super::{same_model, EigenSlot, ModelError, Multiplicity, OperatorModel};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum CopyMap {
    Offset(u64),
    /// copy `c` goes to `c · stride + index`
    Interleave { stride: u64, index: u64 },
}

impl CopyMap {
    fn apply(self, c: u64) -> u64 {
        match self {
            CopyMap::Offset(o) => o + c,
            CopyMap::Interleave { stride, index } => c * stride + index,
        }
    }
}

/// Isometric inclusion of one summand of a direct sum, intertwining `Q`.
#[derive(Clone, Debug)]
pub struct Embedding<T> {
    source: Arc<OperatorModel<T>>,
    target: Arc<OperatorModel<T>>,
    slot_map: Vec<(usize, CopyMap)>,
    summand_offset: usize,
}

impl<T: Scalar> Embedding<T> {
    pub fn identity(model: &Arc<OperatorModel<T>>) -> Self {
        Embedding {
            source: model.clone(),
            target: model.clone(),
            slot_map: (0..model.slots().len()).map(|i| (i, CopyMap::Offset(0))).collect(),
            summand_offset: 0,
        }
    }

    pub fn source(&self) -> &Arc<OperatorModel<T>> {
        &self.source
    }

    pub fn target(&self) -> &Arc<OperatorModel<T>> {
        &self.target
    }

    /// Index of the first source summand inside the target.
    pub fn summand_offset(&self) -> usize {
        self.summand_offset
    }

    pub fn apply(&self, v: &StepVector<T>) -> Result<StepVector<T>, ModelError> {
        if !same_model(&v.model, &self.source) {
            return Err(ModelError::ModelMismatch);
        }
        let slots = v
            .slots
            .iter()
            .map(|(&(s, c), z)| {
                let (t, map) = self.slot_map[s];
                ((t, map.apply(c)), z.clone())
            })
            .collect();
        let mut parts = vec![SummandPart::zero(); self.target.summands().len()];
        for (s, p) in v.parts.iter().enumerate() {
            parts[self.summand_offset + s] = p.clone();
        }
        Ok(StepVector::from_raw(self.target.clone(), slots, parts))
    }
}

/// Orthogonal sum of models. Slots with equal eigenvalues merge; summands
/// are concatenated in order.
pub fn direct_sum<T: Scalar>(
    models: &[Arc<OperatorModel<T>>],
) -> (Arc<OperatorModel<T>>, Vec<Embedding<T>>) {
    let slots: Vec<EigenSlot<T>> = models.iter().flat_map(|m| m.slots().iter().cloned()).collect();
    let summands = models
        .iter()
        .flat_map(|m| m.summands().iter().cloned())
        .collect();
    let target = OperatorModel::new(slots, summands)
        .expect("components are valid models")
        .into_shared();
    let k = models.len() as u64;
    let mut used: Vec<u64> = vec![0; target.slots().len()];
    let mut offset = 0;
    let mut embeddings = Vec::with_capacity(models.len());
    for (i, m) in models.iter().enumerate() {
        let slot_map = m
            .slots()
            .iter()
            .map(|s| {
                let t = target.slot_index(&s.eigenvalue).expect("merged slot");
                let map = if target.slots()[t].multiplicity == Multiplicity::Omega {
                    CopyMap::Interleave {
                        stride: k,
                        index: i as u64,
                    }
                } else {
                    let o = used[t];
                    used[t] += s.multiplicity.finite().expect("finite");
                    CopyMap::Offset(o)
                };
                (t, map)
            })
            .collect();
        embeddings.push(Embedding {
            source: m.clone(),
            target: target.clone(),
            slot_map,
            summand_offset: offset,
        });
        offset += m.summands().len();
    }
    (target, embeddings)
}
