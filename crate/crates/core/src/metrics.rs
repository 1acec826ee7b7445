//! Accuracy measures, decision-fairness measures and the linear score-bias
//! functional.
//!
//! Every function here is pure. Decision fairness works on thresholded 0/1
//! predictions; score bias works on raw (unclipped) real scores so that it
//! stays linear in ensemble weights.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::scalar::{dot, from_usize, mean, to_f64, Scalar};

/// Binary membership of every observation in one protected attribute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupAssignment {
    name: String,
    members: Vec<u8>,
}

impl GroupAssignment {
    pub fn new(name: impl Into<String>, members: Vec<u8>) -> Result<Self> {
        let name = name.into();
        if let Some(i) = members.iter().position(|&m| m > 1) {
            return Err(Error::InvalidInput(format!(
                "attribute `{name}`: value {} at index {i} is not 0/1",
                members[i]
            )));
        }
        Ok(Self { name, members })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn members(&self) -> &[u8] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            name: self.name.clone(),
            members: idx.iter().map(|&i| self.members[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContrastKind {
    DemographicParity,
    EqualityOfOpportunity,
}

impl ContrastKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ContrastKind::DemographicParity => "dp",
            ContrastKind::EqualityOfOpportunity => "eo",
        }
    }
}

/// A fairness contrast: which groups are compared, on which attribute.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ContrastSpec {
    pub kind: ContrastKind,
    pub attribute: String,
}

impl ContrastSpec {
    pub fn demographic_parity(attribute: impl Into<String>) -> Self {
        Self {
            kind: ContrastKind::DemographicParity,
            attribute: attribute.into(),
        }
    }

    pub fn equality_of_opportunity(attribute: impl Into<String>) -> Self {
        Self {
            kind: ContrastKind::EqualityOfOpportunity,
            attribute: attribute.into(),
        }
    }
}

/// Ground truth and protected attributes of one data split.
///
/// Scores are passed alongside rather than stored so one set can evaluate
/// many models.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationSet<T> {
    labels: Vec<T>,
    groups: Vec<GroupAssignment>,
}

impl<T: Scalar> EvaluationSet<T> {
    pub fn new(labels: Vec<T>, groups: Vec<GroupAssignment>) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "evaluation set needs at least 2 observations, got {}",
                labels.len()
            )));
        }
        if let Some(i) = labels.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "labels".into(),
                index: i,
            });
        }
        for g in &groups {
            check_len(
                &format!("attribute `{}` vs labels", g.name()),
                g.len(),
                labels.len(),
            )?;
        }
        Ok(Self { labels, groups })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[T] {
        &self.labels
    }

    pub fn groups(&self) -> &[GroupAssignment] {
        &self.groups
    }

    pub fn group(&self, attribute: &str) -> Result<&GroupAssignment> {
        self.groups
            .iter()
            .find(|g| g.name() == attribute)
            .ok_or_else(|| Error::UnknownAttribute(attribute.to_string()))
    }

    /// Labels as 0/1, failing if any label is not exactly 0 or 1.
    pub fn binary_labels(&self) -> Result<Vec<u8>> {
        binary_labels(&self.labels)
    }

    pub fn has_binary_labels(&self) -> bool {
        self.labels
            .iter()
            .all(|&v| v == T::zero() || v == T::one())
    }

    /// Restriction to the listed rows. Fails if fewer than two rows remain.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        Self::new(
            idx.iter().map(|&i| self.labels[i]).collect(),
            self.groups.iter().map(|g| g.subset(idx)).collect(),
        )
    }
}

pub fn binary_labels<T: Scalar>(labels: &[T]) -> Result<Vec<u8>> {
    labels
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v == T::zero() {
                Ok(0)
            } else if v == T::one() {
                Ok(1)
            } else {
                Err(Error::InvalidInput(format!(
                    "label {} at index {i} is not binary 0/1",
                    to_f64(v)
                )))
            }
        })
        .collect()
}

/// Index sets of the two contrast groups: `first` is the group coded 1,
/// `second` the group coded 0, restricted to positives for equality of
/// opportunity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContrastGroups {
    pub first: Vec<usize>,
    pub second: Vec<usize>,
}

impl ContrastGroups {
    /// Signed difference of group means, `mean(first) - mean(second)`.
    pub fn gap<T: Scalar>(&self, values: &[T]) -> T {
        // centring on a shared value makes a constant column exactly unbiased
        let c = self.first.first().map_or(T::zero(), |&i| values[i]);
        let m1 = mean(self.first.iter().map(|&i| values[i] - c)).unwrap_or(T::zero());
        let m2 = mean(self.second.iter().map(|&i| values[i] - c)).unwrap_or(T::zero());
        m1 - m2
    }
}

pub fn contrast_groups<T: Scalar>(
    contrast: &ContrastSpec,
    eval: &EvaluationSet<T>,
) -> Result<ContrastGroups> {
    let group = eval.group(&contrast.attribute)?;
    let positives = match contrast.kind {
        ContrastKind::DemographicParity => None,
        ContrastKind::EqualityOfOpportunity => Some(eval.binary_labels().map_err(|e| {
            Error::InvalidInput(format!(
                "equality of opportunity requires binary labels: {e}"
            ))
        })?),
    };
    let suffix = match contrast.kind {
        ContrastKind::DemographicParity => "",
        ContrastKind::EqualityOfOpportunity => " with label 1",
    };
    let (first, second) =
        split_by_group(group, |i| positives.as_ref().is_none_or(|y| y[i] == 1), suffix)?;
    Ok(ContrastGroups { first, second })
}

/// `1` where `score > threshold`, else `0` (ties map to 0).
pub fn threshold_decisions<T: Scalar>(scores: &[T], threshold: T) -> Result<Vec<u8>> {
    scores
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            if !s.is_finite() {
                return Err(Error::NonFinite {
                    what: "scores".into(),
                    index: i,
                });
            }
            Ok(u8::from(s > threshold))
        })
        .collect()
}

pub fn classification_accuracy<T: Scalar>(pred: &[u8], truth: &[u8]) -> Result<T> {
    check_len("predictions vs labels", pred.len(), truth.len())?;
    if pred.is_empty() {
        return Err(Error::InvalidInput("accuracy of an empty vector".into()));
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(from_usize::<T>(hits) / from_usize(pred.len()))
}

/// Mean squared error of scores against targets.
pub fn brier_loss<T: Scalar>(scores: &[T], truth: &[T]) -> Result<T> {
    check_len("scores vs labels", scores.len(), truth.len())?;
    mean(scores.iter().zip(truth).map(|(&s, &y)| (s - y) * (s - y)))
        .ok_or_else(|| Error::InvalidInput("loss of an empty vector".into()))
}

/// `exp(-MSE)`, an accuracy in (0, 1] for real-valued targets.
pub fn regression_accuracy<T: Scalar>(scores: &[T], truth: &[T]) -> Result<T> {
    Ok((-brier_loss(scores, truth)?).exp())
}

fn rate_gap<T: Scalar>(pred: &[u8], first: &[usize], second: &[usize]) -> T {
    let rate = |idx: &[usize]| {
        from_usize::<T>(idx.iter().filter(|&&i| pred[i] == 1).count()) / from_usize(idx.len())
    };
    rate(first) - rate(second)
}

fn split_by_group(
    group: &GroupAssignment,
    keep: impl Fn(usize) -> bool,
    suffix: &str,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut first = Vec::new();
    let mut second = Vec::new();
    for (i, &m) in group.members().iter().enumerate() {
        if !keep(i) {
            continue;
        }
        if m == 1 {
            first.push(i);
        } else {
            second.push(i);
        }
    }
    for (set, g) in [(&first, 1), (&second, 0)] {
        if set.is_empty() {
            return Err(Error::EmptyGroup {
                attribute: group.name().to_string(),
                group: format!("{g}{suffix}"),
            });
        }
    }
    Ok((first, second))
}

/// `1 - |P(pred = 1 | A = 1) - P(pred = 1 | A = 0)|`.
pub fn dp_fairness<T: Scalar>(pred: &[u8], group: &GroupAssignment) -> Result<T> {
    check_len("predictions vs attribute", pred.len(), group.len())?;
    let (first, second) = split_by_group(group, |_| true, "")?;
    Ok(T::one() - rate_gap::<T>(pred, &first, &second).abs())
}

/// `1 - |TPR(A = 1) - TPR(A = 0)|`.
pub fn eo_fairness<T: Scalar>(pred: &[u8], truth: &[u8], group: &GroupAssignment) -> Result<T> {
    check_len("predictions vs attribute", pred.len(), group.len())?;
    check_len("predictions vs labels", pred.len(), truth.len())?;
    let (first, second) = split_by_group(group, |i| truth[i] == 1, " with label 1")?;
    Ok(T::one() - rate_gap::<T>(pred, &first, &second).abs())
}

/// Signed difference of mean scores between the contrast groups.
pub fn score_bias<T: Scalar>(
    scores: &[T],
    contrast: &ContrastSpec,
    eval: &EvaluationSet<T>,
) -> Result<T> {
    check_len("scores vs evaluation set", scores.len(), eval.len())?;
    if let Some(i) = scores.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "scores".into(),
            index: i,
        });
    }
    Ok(contrast_groups(contrast, eval)?.gap(scores))
}

/// Signed difference of positive-decision rates between the contrast groups.
pub fn decision_bias<T: Scalar>(
    pred: &[u8],
    contrast: &ContrastSpec,
    eval: &EvaluationSet<T>,
) -> Result<T> {
    check_len("predictions vs evaluation set", pred.len(), eval.len())?;
    let groups = contrast_groups(contrast, eval)?;
    Ok(rate_gap(pred, &groups.first, &groups.second))
}

/// Score bias of `Σ wᵢ hᵢ` from the per-model biases, by linearity.
pub fn ensemble_score_bias<T: Scalar>(weights: &[T], per_model_bias: &[T]) -> Result<T> {
    check_len("weights vs per-model biases", weights.len(), per_model_bias.len())?;
    if weights.is_empty() {
        return Err(Error::InvalidInput("ensemble with no members".into()));
    }
    Ok(dot(weights, per_model_bias))
}
