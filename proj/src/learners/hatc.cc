/*
 * Copyright 2024 The Cogstream Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "cogstream/learners/hatc.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cogstream/learners/adwin.h"
#include "cogstream/learners/gaussian.h"
#include "cogstream/learners/gnb.h"

namespace cogstream::learners {

struct HoeffdingAdaptiveTree::Node {
  int depth = 0;
  std::array<double, 2> stats{};  // class weights; index 1 = present
  Adwin adwin;
  std::unique_ptr<Node> alternate;

  // Internal nodes: x[split_slot] <= threshold goes left.
  std::string split_slot;
  double threshold = 0.0;
  std::unique_ptr<Node> left;
  std::unique_ptr<Node> right;

  // Leaves.
  std::array<std::map<std::string, GaussianEstimator>, 2> observers;
  double weight_seen = 0.0;
  double last_attempt = 0.0;
  double mc_correct = 0.0;
  double nb_correct = 0.0;

  explicit Node(int d, double adwin_delta) : depth(d), adwin(adwin_delta) {}

  bool is_leaf() const { return !left; }
  double total() const { return stats[0] + stats[1]; }

  std::unique_ptr<Node> deep_copy() const {
    auto n = std::make_unique<Node>(*this, CopyTag{});
    return n;
  }

  struct CopyTag {};
  Node(const Node& o, CopyTag)
      : depth(o.depth),
        stats(o.stats),
        adwin(o.adwin),
        alternate(o.alternate ? o.alternate->deep_copy() : nullptr),
        split_slot(o.split_slot),
        threshold(o.threshold),
        left(o.left ? o.left->deep_copy() : nullptr),
        right(o.right ? o.right->deep_copy() : nullptr),
        observers(o.observers),
        weight_seen(o.weight_seen),
        last_attempt(o.last_attempt),
        mc_correct(o.mc_correct),
        nb_correct(o.nb_correct) {}

  const Node& child_for(const NamedVector& x) const {
    const auto it = x.find(split_slot);
    if (it != x.end()) return it->second <= threshold ? *left : *right;
    return right->total() > left->total() ? *right : *left;
  }
  std::unique_ptr<Node>& child_ref(const NamedVector& x) {
    const Node& c = std::as_const(*this).child_for(x);
    return &c == left.get() ? left : right;
  }

  const Node& leaf_for(const NamedVector& x) const {
    const Node* n = this;
    while (!n->is_leaf()) n = &n->child_for(x);
    return *n;
  }

  ClassProbabilities leaf_proba(const NamedVector& x) const {
    const double t = total();
    if (!(t > 0.0)) return {};
    const bool use_nb = !(mc_correct > nb_correct) &&
                        !(observers[0].empty() && observers[1].empty());
    if (use_nb) return naive_bayes_posterior(stats, observers, x);
    ClassProbabilities p;
    p.present = stats[1] / t;
    p.absent = stats[0] / t;
    return p;
  }

  ClassProbabilities predict(const NamedVector& x) const {
    return leaf_for(x).leaf_proba(x);
  }

  int count_nodes() const {
    return is_leaf() ? 1 : 1 + left->count_nodes() + right->count_nodes();
  }
  int count_leaves() const {
    return is_leaf() ? 1 : left->count_leaves() + right->count_leaves();
  }
  int max_depth() const {
    return is_leaf() ? depth : std::max(left->max_depth(), right->max_depth());
  }
  int count_alternates() const {
    int n = alternate ? 1 : 0;
    if (!is_leaf()) n += left->count_alternates() + right->count_alternates();
    return n;
  }

  nlohmann::json to_json() const {
    nlohmann::json j = {{"depth", depth},
                        {"stats", {stats[0], stats[1]}},
                        {"adwin", adwin.to_json()}};
    j["alternate"] = alternate ? alternate->to_json() : nlohmann::json(nullptr);
    if (!is_leaf()) {
      j["slot"] = split_slot;
      j["threshold"] = threshold;
      j["left"] = left->to_json();
      j["right"] = right->to_json();
      return j;
    }
    nlohmann::json obs = nlohmann::json::array();
    for (const auto& per_class : observers) {
      nlohmann::json m = nlohmann::json::object();
      for (const auto& [slot, g] : per_class) m[slot] = g.to_json();
      obs.push_back(std::move(m));
    }
    j["observers"] = std::move(obs);
    j["weight_seen"] = weight_seen;
    j["last_attempt"] = last_attempt;
    j["mc_correct"] = mc_correct;
    j["nb_correct"] = nb_correct;
    return j;
  }

  static std::unique_ptr<Node> from_json(const nlohmann::json& j) {
    auto n = std::make_unique<Node>(j.at("depth").get<int>(), 0.002);
    n->stats = {j.at("stats").at(0).get<double>(), j.at("stats").at(1).get<double>()};
    n->adwin = Adwin::from_json(j.at("adwin"));
    if (!j.at("alternate").is_null()) n->alternate = from_json(j["alternate"]);
    if (j.contains("slot")) {
      n->split_slot = j["slot"].get<std::string>();
      n->threshold = j.at("threshold").get<double>();
      n->left = from_json(j.at("left"));
      n->right = from_json(j.at("right"));
      return n;
    }
    for (std::size_t c = 0; c < 2; ++c) {
      for (const auto& [slot, g] : j.at("observers").at(c).items()) {
        n->observers[c].emplace(slot, GaussianEstimator::from_json(g));
      }
    }
    n->weight_seen = j.at("weight_seen").get<double>();
    n->last_attempt = j.at("last_attempt").get<double>();
    n->mc_correct = j.at("mc_correct").get<double>();
    n->nb_correct = j.at("nb_correct").get<double>();
    return n;
  }
};

namespace {

std::size_t cls(Label y) { return y == Label::kPresent ? 1 : 0; }

double entropy(double a, double b) {
  const double t = a + b;
  if (!(t > 0.0)) return 0.0;
  double h = 0.0;
  for (double v : {a, b}) {
    if (v > 0.0) h -= (v / t) * std::log2(v / t);
  }
  return h;
}

struct SplitCandidate {
  std::string slot;
  double threshold = 0.0;
  double merit = 0.0;
  std::array<double, 2> left{};
  std::array<double, 2> right{};
};

std::string_view subspace_name(SubspaceMode m) {
  switch (m) {
    case SubspaceMode::kAll: return "all";
    case SubspaceMode::kSqrt: return "sqrt";
    case SubspaceMode::kFixed: return "fixed";
  }
  return "all";
}

SubspaceMode parse_subspace(const std::string& s) {
  if (s == "sqrt") return SubspaceMode::kSqrt;
  if (s == "fixed") return SubspaceMode::kFixed;
  if (s == "all") return SubspaceMode::kAll;
  throw Error("unknown subspace mode '" + s + "'");
}

std::string rng_state(const std::mt19937_64& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

}  // namespace

nlohmann::json hatc_params_to_json(const HatcParams& p) {
  nlohmann::json j = {{"tie_threshold", p.tie_threshold},
                      {"max_size", p.max_size},
                      {"grace_period", p.grace_period},
                      {"split_confidence", p.split_confidence},
                      {"n_split_points", p.n_split_points},
                      {"adwin_delta", p.adwin_delta},
                      {"switch_significance", p.switch_significance},
                      {"drift_window_threshold", p.drift_window_threshold},
                      {"subspace", subspace_name(p.subspace)},
                      {"subspace_size", p.subspace_size},
                      {"seed", p.seed}};
  j["max_depth"] = p.max_depth ? nlohmann::json(*p.max_depth) : nlohmann::json(nullptr);
  return j;
}

HatcParams hatc_params_from_json(const nlohmann::json& j) {
  HatcParams p;
  if (j.contains("max_depth") && !j["max_depth"].is_null()) {
    p.max_depth = j["max_depth"].get<int>();
  }
  p.tie_threshold = j.value("tie_threshold", p.tie_threshold);
  p.max_size = j.value("max_size", p.max_size);
  p.grace_period = j.value("grace_period", p.grace_period);
  p.split_confidence = j.value("split_confidence", p.split_confidence);
  p.n_split_points = j.value("n_split_points", p.n_split_points);
  p.adwin_delta = j.value("adwin_delta", p.adwin_delta);
  p.switch_significance = j.value("switch_significance", p.switch_significance);
  p.drift_window_threshold = j.value("drift_window_threshold", p.drift_window_threshold);
  p.subspace = parse_subspace(j.value("subspace", std::string("all")));
  p.subspace_size = j.value("subspace_size", p.subspace_size);
  p.seed = j.value("seed", p.seed);
  return p;
}

HoeffdingAdaptiveTree::HoeffdingAdaptiveTree(HatcParams params)
    : params_(params),
      root_(std::make_unique<Node>(0, params.adwin_delta)),
      rng_(params.seed) {}

HoeffdingAdaptiveTree::HoeffdingAdaptiveTree(const HoeffdingAdaptiveTree& other)
    : params_(other.params_),
      root_(other.root_->deep_copy()),
      rng_(other.rng_),
      switches_(other.switches_),
      splits_(other.splits_) {}

HoeffdingAdaptiveTree& HoeffdingAdaptiveTree::operator=(
    const HoeffdingAdaptiveTree& other) {
  if (this != &other) *this = HoeffdingAdaptiveTree(other);
  return *this;
}

HoeffdingAdaptiveTree::HoeffdingAdaptiveTree(HoeffdingAdaptiveTree&&) noexcept = default;
HoeffdingAdaptiveTree& HoeffdingAdaptiveTree::operator=(HoeffdingAdaptiveTree&&) noexcept =
    default;
HoeffdingAdaptiveTree::~HoeffdingAdaptiveTree() = default;

int HoeffdingAdaptiveTree::node_count() const { return root_->count_nodes(); }
int HoeffdingAdaptiveTree::leaf_count() const { return root_->count_leaves(); }
int HoeffdingAdaptiveTree::depth() const { return root_->max_depth(); }
int HoeffdingAdaptiveTree::alternate_trees() const {
  return root_->count_alternates();
}

ClassProbabilities HoeffdingAdaptiveTree::predict_proba(const NamedVector& x) const {
  return root_->predict(x);
}

void HoeffdingAdaptiveTree::learn_one(const NamedVector& x, Label y, double weight) {
  if (!(weight > 0.0)) return;
  learn_node(root_, x, y, weight, std::nullopt);
}

void HoeffdingAdaptiveTree::learn_node(std::unique_ptr<Node>& node_ref,
                                       const NamedVector& x, Label y,
                                       double weight,
                                       std::optional<Label> path_prediction) {
  Node& node = *node_ref;
  // Every node on the main path reaches the same leaf, so one prediction
  // serves all of them; alternates compute their own.
  const Label predicted =
      path_prediction ? *path_prediction : node.predict(x).argmax();
  const double before = node.adwin.estimation();
  const bool change = node.adwin.update(predicted == y ? 0.0 : 1.0);
  const bool error_increased = change && node.adwin.estimation() > before;

  if (node.is_leaf()) {
    learn_leaf(node, x, y, weight);
    return;
  }

  if (error_increased && !node.alternate) {
    node.alternate = std::make_unique<Node>(node.depth, params_.adwin_delta);
  } else if (node.alternate &&
             node.alternate->adwin.width() > params_.drift_window_threshold &&
             node.adwin.width() > params_.drift_window_threshold) {
    const double old_err = node.adwin.estimation();
    const double alt_err = node.alternate->adwin.estimation();
    const double fn = 1.0 / static_cast<double>(node.alternate->adwin.width()) +
                      1.0 / static_cast<double>(node.adwin.width());
    const double bound = std::sqrt(2.0 * old_err * (1.0 - old_err) *
                                   std::log(2.0 / params_.switch_significance) * fn);
    if (bound < old_err - alt_err) {
      std::unique_ptr<Node> replacement = std::move(node.alternate);
      node_ref = std::move(replacement);
      ++switches_;
      return;
    }
    if (bound < alt_err - old_err) node.alternate.reset();
  }

  if (node.alternate) learn_node(node.alternate, x, y, weight, std::nullopt);
  node.stats[cls(y)] += weight;
  learn_node(node.child_ref(x), x, y, weight, predicted);
}

void HoeffdingAdaptiveTree::learn_leaf(Node& leaf, const NamedVector& x, Label y,
                                       double weight) {
  if (leaf.total() > 0.0) {
    const Label mc = leaf.stats[1] > leaf.stats[0] ? Label::kPresent : Label::kAbsent;
    if (mc == y) leaf.mc_correct += weight;
    if (naive_bayes_posterior(leaf.stats, leaf.observers, x).argmax() == y) {
      leaf.nb_correct += weight;
    }
  }
  leaf.stats[cls(y)] += weight;
  leaf.weight_seen += weight;
  for (const auto& [slot, value] : x) leaf.observers[cls(y)][slot].update(value, weight);

  if (leaf.weight_seen - leaf.last_attempt >= params_.grace_period) {
    leaf.last_attempt = leaf.weight_seen;
    attempt_split(leaf);
  }
}

std::vector<std::string> HoeffdingAdaptiveTree::candidate_slots(const Node& leaf) {
  std::vector<std::string> slots;
  for (const auto& per_class : leaf.observers) {
    for (const auto& [slot, _] : per_class) slots.push_back(slot);
  }
  std::sort(slots.begin(), slots.end());
  slots.erase(std::unique(slots.begin(), slots.end()), slots.end());

  std::size_t m = slots.size();
  if (params_.subspace == SubspaceMode::kSqrt) {
    m = static_cast<std::size_t>(
        std::max(1.0, std::round(std::sqrt(static_cast<double>(slots.size())))));
  } else if (params_.subspace == SubspaceMode::kFixed) {
    m = static_cast<std::size_t>(std::max(1, params_.subspace_size));
  }
  if (m < slots.size()) {
    std::vector<std::string> chosen;
    std::sample(slots.begin(), slots.end(), std::back_inserter(chosen), m, rng_);
    return chosen;
  }
  return slots;
}

void HoeffdingAdaptiveTree::attempt_split(Node& leaf) {
  if (!(leaf.stats[0] > 0.0) || !(leaf.stats[1] > 0.0)) return;
  if (params_.max_depth && leaf.depth >= *params_.max_depth) return;
  if (root_->count_nodes() + 2 > params_.max_size) return;

  static const GaussianEstimator kEmpty;
  std::vector<SplitCandidate> candidates;
  for (const auto& slot : candidate_slots(leaf)) {
    const auto find = [&](std::size_t c) -> const GaussianEstimator& {
      const auto it = leaf.observers[c].find(slot);
      return it == leaf.observers[c].end() ? kEmpty : it->second;
    };
    const GaussianEstimator& g0 = find(0);
    const GaussianEstimator& g1 = find(1);
    const std::array<double, 2> pre = {g0.weight(), g1.weight()};
    const double total = pre[0] + pre[1];
    if (!(total > 0.0)) continue;
    double lo = 0.0;
    double hi = 0.0;
    bool init = false;
    for (const GaussianEstimator* g : {&g0, &g1}) {
      if (!(g->weight() > 0.0)) continue;
      lo = init ? std::min(lo, g->min()) : g->min();
      hi = init ? std::max(hi, g->max()) : g->max();
      init = true;
    }
    if (!(hi > lo)) continue;

    const double pre_entropy = entropy(pre[0], pre[1]);
    SplitCandidate best;
    bool found = false;
    for (int i = 1; i <= params_.n_split_points; ++i) {
      const double t = lo + (hi - lo) * i / (params_.n_split_points + 1.0);
      const std::array<double, 2> left = {g0.weight_below(t), g1.weight_below(t)};
      const std::array<double, 2> right = {pre[0] - left[0], pre[1] - left[1]};
      const double wl = left[0] + left[1];
      const double wr = right[0] + right[1];
      // Both branches must carry at least 1% of the weight.
      if (wl < 0.01 * total || wr < 0.01 * total) continue;
      const double merit = pre_entropy - (wl / total) * entropy(left[0], left[1]) -
                           (wr / total) * entropy(right[0], right[1]);
      if (!found || merit > best.merit) {
        best = SplitCandidate{slot, t, merit, left, right};
        found = true;
      }
    }
    if (found) candidates.push_back(std::move(best));
  }
  if (candidates.empty()) return;

  std::sort(candidates.begin(), candidates.end(),
            [](const SplitCandidate& a, const SplitCandidate& b) {
              if (a.merit != b.merit) return a.merit > b.merit;
              return a.slot < b.slot;
            });
  const SplitCandidate& best = candidates[0];
  // The "no split" option competes with merit 0.
  const double second = candidates.size() > 1 ? std::max(candidates[1].merit, 0.0) : 0.0;
  const double epsilon =
      hoeffding_bound(1.0, params_.split_confidence, leaf.weight_seen);
  if (!(best.merit > 0.0)) return;
  if (!(best.merit - second > epsilon || epsilon < params_.tie_threshold)) return;

  leaf.split_slot = best.slot;
  leaf.threshold = best.threshold;
  leaf.left = std::make_unique<Node>(leaf.depth + 1, params_.adwin_delta);
  leaf.right = std::make_unique<Node>(leaf.depth + 1, params_.adwin_delta);
  leaf.left->stats = best.left;
  leaf.right->stats = best.right;
  leaf.observers = {};
  leaf.weight_seen = leaf.last_attempt = leaf.mc_correct = leaf.nb_correct = 0.0;
  ++splits_;
}

nlohmann::json HoeffdingAdaptiveTree::state_json() const {
  return {{"root", root_->to_json()},
          {"rng", rng_state(rng_)},
          {"switches", switches_},
          {"splits", splits_}};
}

std::unique_ptr<HoeffdingAdaptiveTree> HoeffdingAdaptiveTree::restore(
    const nlohmann::json& params, const nlohmann::json& state) {
  auto tree = std::make_unique<HoeffdingAdaptiveTree>(hatc_params_from_json(params));
  tree->root_ = Node::from_json(state.at("root"));
  std::istringstream in(state.at("rng").get<std::string>());
  in >> tree->rng_;
  tree->switches_ = state.at("switches").get<std::int64_t>();
  tree->splits_ = state.at("splits").get<std::int64_t>();
  return tree;
}

}  // namespace cogstream::learners
