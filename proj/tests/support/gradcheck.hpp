#pragma once

// Central-difference gradient checks shared by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "noisylab/autodiff.hpp"
#include "noisylab/losses.hpp"
#include "noisylab/mlp.hpp"

namespace gradcheck {

using namespace noisylab;

enum class Objective {
  cross_entropy,
  bootstrap_soft,
  bootstrap_hard,
  mixup_ce,
  joint_soft,
  joint_hard,
  joint_tempered,
  joint_dynamic_regularized,
  regularizer,
};

inline const std::vector<Objective>& all_objectives() {
  static const std::vector<Objective> all{
      Objective::cross_entropy, Objective::bootstrap_soft, Objective::bootstrap_hard,
      Objective::mixup_ce,      Objective::joint_soft,     Objective::joint_hard,
      Objective::joint_tempered, Objective::joint_dynamic_regularized, Objective::regularizer};
  return all;
}

inline std::string name(Objective o) {
  switch (o) {
    case Objective::cross_entropy: return "cross_entropy";
    case Objective::bootstrap_soft: return "bootstrap_soft";
    case Objective::bootstrap_hard: return "bootstrap_hard";
    case Objective::mixup_ce: return "mixup_ce";
    case Objective::joint_soft: return "joint_soft";
    case Objective::joint_hard: return "joint_hard";
    case Objective::joint_tempered: return "joint_tempered";
    case Objective::joint_dynamic_regularized: return "joint_dynamic_regularized";
    case Objective::regularizer: return "regularizer";
  }
  return "?";
}

// Everything that is a constant of the objective, computed once at theta_0.
struct Fixture {
  Tensor batch;
  std::vector<int> labels;
  Tensor bootstrap_targets;
  MixedBatch mixed;
  Tensor clean_scores;
  JointTargets joint;
  double eta = 1.0;
};

inline Fixture make_fixture(Mlp& model, Objective o, std::mt19937_64& rng) {
  const std::size_t batch = 4;
  const std::size_t dim = model.input_size();
  const std::size_t classes = model.class_count();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> cls(0, static_cast<int>(classes) - 1);

  Fixture f;
  f.batch = Tensor({batch, dim});
  for (double& x : f.batch.data()) x = normal(rng);
  for (std::size_t i = 0; i < batch; ++i) f.labels.push_back(cls(rng));
  f.clean_scores = forward(model, f.batch);

  std::vector<double> w(batch);
  for (double& v : w) v = unit(rng);
  if (o == Objective::bootstrap_soft || o == Objective::bootstrap_hard) {
    const auto bt = make_batch_targets(f.labels, w, softmax(f.clean_scores));
    f.bootstrap_targets = noisylab::bootstrap_targets(
        bt, o == Objective::bootstrap_soft ? BootstrapMode::soft : BootstrapMode::hard);
  }

  const auto partner = random_pairing(batch, rng);
  std::vector<double> deltas(batch);
  if (o == Objective::joint_dynamic_regularized) {
    std::vector<double> clean(batch);
    for (double& c : clean) c = unit(rng);
    for (std::size_t i = 0; i < batch; ++i) deltas[i] = dynamic_mixup_coefficient(clean[i], clean[partner[i]]);
  } else {
    for (double& d : deltas) d = sample_beta(2.0, 2.0, rng);
  }
  f.mixed = mixup_blend(f.batch, partner, deltas);

  f.joint.labels = f.labels;
  f.joint.pairs = f.mixed.pairs;
  f.joint.noisy_weights = w;
  f.joint.classes = classes;
  switch (o) {
    case Objective::joint_soft: f.joint.mode = {TargetKind::soft, 1.0}; break;
    case Objective::joint_tempered: f.joint.mode = {TargetKind::tempered, 0.1 + unit(rng)}; break;
    default: f.joint.mode = {TargetKind::hard, 1.0}; break;
  }
  f.eta = 0.5 + unit(rng);
  return f;
}

// The fixture may have moved since construction, so the score pointer is
// attached at use.
inline JointTargets with_scores(const Fixture& f) {
  JointTargets j = f.joint;
  j.clean_scores = &f.clean_scores;
  return j;
}

inline Var build(Graph& g, Mlp& model, const Fixture& f, Objective o) {
  const std::size_t classes = model.class_count();
  switch (o) {
    case Objective::cross_entropy: {
      Var p = g.softmax(forward(g, model, f.batch));
      return g.mean(g.soft_target_nll(p, one_hot(f.labels, classes)));
    }
    case Objective::bootstrap_soft:
    case Objective::bootstrap_hard: {
      Var p = g.softmax(forward(g, model, f.batch));
      return g.mean(g.soft_target_nll(p, f.bootstrap_targets));
    }
    case Objective::mixup_ce: {
      Var p = g.softmax(forward(g, model, f.mixed.inputs));
      std::vector<int> lq;
      std::vector<double> d;
      for (const auto& pair : f.mixed.pairs) {
        lq.push_back(f.labels[pair.index_q]);
        d.push_back(pair.delta);
      }
      return g.mean(g.convex_combine(g.soft_target_nll(p, one_hot(f.labels, classes)),
                                     g.soft_target_nll(p, one_hot(lq, classes)), d));
    }
    case Objective::joint_soft:
    case Objective::joint_hard:
    case Objective::joint_tempered: {
      Var p = g.softmax(forward(g, model, f.mixed.inputs));
      return joint_corrected_loss(g, p, with_scores(f));
    }
    case Objective::joint_dynamic_regularized: {
      Var p = g.softmax(forward(g, model, f.mixed.inputs));
      return g.add(joint_corrected_loss(g, p, with_scores(f)), g.scale(g.uniform_prior_kl(p), f.eta));
    }
    case Objective::regularizer: {
      Var p = g.softmax(forward(g, model, f.batch));
      return g.uniform_prior_kl(p);
    }
  }
  return {};
}

/// Worst per-entry relative error |a - n| / max(|a|, |n|, 1e-6) over all
/// parameters, with central differences of step 1e-5.
inline double max_relative_error(Mlp& model, const Fixture& f, Objective o, double step = 1e-5) {
  model.zero_grad();
  {
    Graph g;
    Var loss = build(g, model, f, o);
    g.backward(loss);
  }
  auto value = [&] {
    Graph g;
    return g.scalar(build(g, model, f, o));
  };
  double worst = 0.0;
  for (Tensor* p : model.parameters()) {
    const std::vector<double> analytic(p->grad().begin(), p->grad().end());
    for (std::size_t j = 0; j < p->size(); ++j) {
      const double saved = (*p)[j];
      (*p)[j] = saved + step;
      const double up = value();
      (*p)[j] = saved - step;
      const double down = value();
      (*p)[j] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double scale = std::max({std::abs(analytic[j]), std::abs(numeric), 1e-6});
      worst = std::max(worst, std::abs(analytic[j] - numeric) / scale);
    }
  }
  model.zero_grad();
  return worst;
}

/// One random instance: small seeded model, random batch and constants.
inline double random_instance_error(Objective o, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> width(2, 6);
  const std::size_t dim = width(rng);
  const std::size_t classes = width(rng);
  Mlp model({dim, width(rng), width(rng), classes}, seed * 7919 + 1);
  const Fixture f = make_fixture(model, o, rng);
  return max_relative_error(model, f, o);
}

}  // namespace gradcheck
