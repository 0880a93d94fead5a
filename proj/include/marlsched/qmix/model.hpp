#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "marlsched/neuro/checkpoint.hpp"
#include "marlsched/neuro/layers.hpp"
#include "marlsched/simcore/rng.hpp"

namespace marlsched::qmix {

struct ModelConfig {
  int n_agents = 3;     // one agent per RBG
  int max_users = 10;   // action head width (user ordinals)
  int obs_width = 36;
  int state_width = 64;
  int hidden = 64;
  int mix_hidden = 32;
  bool centralized = false;  // one parameter set shared by every agent slot

  int n_nets() const { return centralized ? 1 : n_agents; }
  int agent_input() const { return obs_width + max_users; }

  nlohmann::json to_json() const {
    return {{"n_agents", n_agents},     {"max_users", max_users},
            {"obs_width", obs_width},   {"state_width", state_width},
            {"hidden", hidden},         {"mix_hidden", mix_hidden},
            {"centralized", centralized}};
  }
  static ModelConfig from_json(const nlohmann::json& j) {
    ModelConfig mc;
    mc.n_agents = j.at("n_agents").get<int>();
    mc.max_users = j.at("max_users").get<int>();
    mc.obs_width = j.at("obs_width").get<int>();
    mc.state_width = j.at("state_width").get<int>();
    mc.hidden = j.at("hidden").get<int>();
    mc.mix_hidden = j.at("mix_hidden").get<int>();
    mc.centralized = j.at("centralized").get<bool>();
    return mc;
  }
};

// Recurrent utility network of one agent: (observation, one-hot last action)
// -> rectified projection -> GRU -> one utility per user ordinal. Columns are
// batch samples. One forward's caches stay valid until the next forward.
template <typename Scalar>
struct AgentNet {
  neuro::Linear<Scalar> fc;
  neuro::GruCell<Scalar> gru;
  neuro::Linear<Scalar> head;

  AgentNet(const std::string& prefix, const ModelConfig& mc)
      : fc(prefix + ".fc", mc.agent_input(), mc.hidden),
        gru(prefix + ".gru", mc.hidden, mc.hidden),
        head(prefix + ".head", mc.hidden, mc.max_users) {}

  struct Out {
    neuro::Mat<Scalar> q;  // max_users x B
    neuro::Mat<Scalar> h;  // hidden x B
  };

  Out forward(const neuro::Mat<Scalar>& x, const neuro::Mat<Scalar>& h) {
    pre_ = fc.forward(x);
    neuro::Mat<Scalar> hid = gru.forward(neuro::relu(pre_), h);
    neuro::Mat<Scalar> q = head.forward(hid);
    return {std::move(q), std::move(hid)};
  }

  // Stored hidden inputs are replayed as constants, so no gradient flows
  // across TTI boundaries; only parameter gradients are accumulated.
  void backward(const neuro::Mat<Scalar>& gq) {
    neuro::Mat<Scalar> ghid = head.backward(gq);
    auto [gact, gh_prev] = gru.backward(ghid);
    (void)gh_prev;
    fc.backward(neuro::relu_backward(gact, pre_));
  }

  std::vector<neuro::ParamTensor<Scalar>*> params() {
    return {&fc.W, &fc.b, &gru.Wx, &gru.Wh, &gru.bx, &gru.bh, &head.W, &head.b};
  }

  void init(simcore::RngStream& rng) {
    fc.init(rng);
    gru.init(rng);
    head.init(rng);
  }

 private:
  neuro::Mat<Scalar> pre_;
};

// Monotonic mixing network. A hypernetwork maps the global state to
// per-sample mixing parameters; the agent-utility weights pass through an
// absolute activation, which keeps dQ_tot/dQ_a >= 0:
//   Q_tot = |w2|^T elu(|W1| q + b1) + b2
// with W1 in R^{m x K} and b2 produced by a two-layer head with an internal
// rectifier.
template <typename Scalar>
struct Mixer {
  neuro::Linear<Scalar> w1, b1, w2, b2a, b2b;

  explicit Mixer(const ModelConfig& mc)
      : w1("hyper.w1", mc.state_width, mc.mix_hidden * mc.n_agents),
        b1("hyper.b1", mc.state_width, mc.mix_hidden),
        w2("hyper.w2", mc.state_width, mc.mix_hidden),
        b2a("hyper.b2a", mc.state_width, mc.mix_hidden),
        b2b("hyper.b2b", mc.mix_hidden, 1),
        m_(mc.mix_hidden),
        k_(mc.n_agents) {}

  void init(simcore::RngStream& rng) {
    w1.init(rng);
    b1.init(rng);
    w2.init(rng);
    b2a.init(rng);
    b2b.init(rng);
  }

  std::vector<neuro::ParamTensor<Scalar>*> params() {
    return {&w1.W, &w1.b, &b1.W, &b1.b, &w2.W, &w2.b, &b2a.W, &b2a.b, &b2b.W, &b2b.b};
  }

  // states: state_width x B, q: K x B. Returns Q_tot as 1 x B.
  neuro::Mat<Scalar> forward(const neuro::Mat<Scalar>& states, const neuro::Mat<Scalar>& q) {
    const auto B = states.cols();
    w1raw_ = w1.forward(states);
    b1v_ = b1.forward(states);
    w2raw_ = w2.forward(states);
    b2pre_ = b2a.forward(states);
    const neuro::Mat<Scalar> b2v = b2b.forward(neuro::relu(b2pre_));
    q_ = q;
    a_.resize(m_, B);
    neuro::Mat<Scalar> qtot(1, B);
    for (Eigen::Index c = 0; c < B; ++c) {
      Eigen::Map<const neuro::Mat<Scalar>> w1c(w1raw_.data() + m_ * k_ * c, m_, k_);
      neuro::Vec<Scalar> e = w1c.cwiseAbs() * q.col(c) + b1v_.col(c);
      a_.col(c) = (e.array() > Scalar(0)).select(e.array(), e.array().exp() - Scalar(1)).matrix();
      qtot(0, c) = w2raw_.col(c).cwiseAbs().dot(a_.col(c)) + b2v(0, c);
    }
    return qtot;
  }

  // gqtot: 1 x B. Accumulates hypernetwork gradients, returns dL/dq (K x B).
  neuro::Mat<Scalar> backward(const neuro::Mat<Scalar>& gqtot) {
    const auto B = gqtot.cols();
    neuro::Mat<Scalar> gw1raw(m_ * k_, B), gb1(m_, B), gw2raw(m_, B), gq(k_, B);
    for (Eigen::Index c = 0; c < B; ++c) {
      const Scalar d = gqtot(0, c);
      const auto a = a_.col(c).array();
      // elu'(e) reconstructed from the output: 1 where a>0, a+1 otherwise.
      const neuro::Vec<Scalar> ge =
          (d * w2raw_.col(c).array().abs() *
           (a > Scalar(0)).select(neuro::Vec<Scalar>::Ones(m_).array(), a + Scalar(1)))
              .matrix();
      Eigen::Map<const neuro::Mat<Scalar>> w1c(w1raw_.data() + m_ * k_ * c, m_, k_);
      gq.col(c).noalias() = w1c.cwiseAbs().transpose() * ge;
      Eigen::Map<neuro::Mat<Scalar>> gw1c(gw1raw.data() + m_ * k_ * c, m_, k_);
      gw1c = (ge * q_.col(c).transpose()).cwiseProduct(w1c.array().sign().matrix());
      gb1.col(c) = ge;
      gw2raw.col(c) = (d * a_.col(c).array() * w2raw_.col(c).array().sign()).matrix();
    }
    (void)w1.backward(gw1raw);
    (void)b1.backward(gb1);
    (void)w2.backward(gw2raw);
    const neuro::Mat<Scalar> gb2h = b2b.backward(gqtot);
    (void)b2a.backward(neuro::relu_backward(gb2h, b2pre_));
    return gq;
  }

 private:
  Eigen::Index m_, k_;
  neuro::Mat<Scalar> w1raw_, b1v_, w2raw_, b2pre_, q_, a_;
};

template <typename Scalar>
struct QmixModel {
  ModelConfig cfg;
  std::vector<AgentNet<Scalar>> nets;  // size 1 when centralized
  Mixer<Scalar> mixer;

  explicit QmixModel(const ModelConfig& mc) : cfg(mc), mixer(mc) {
    nets.reserve(static_cast<std::size_t>(mc.n_nets()));
    for (int i = 0; i < mc.n_nets(); ++i) nets.emplace_back(net_name(mc, i), mc);
  }

  static std::string net_name(const ModelConfig& mc, int i) {
    return mc.centralized ? std::string("shared") : "agent" + std::to_string(i);
  }

  int net_index(int slot) const { return cfg.centralized ? 0 : slot; }
  AgentNet<Scalar>& slot_net(int slot) { return nets[static_cast<std::size_t>(net_index(slot))]; }

  void init(simcore::RngStream& rng) {
    for (auto& n : nets) n.init(rng);
    mixer.init(rng);
  }

  std::vector<neuro::ParamTensor<Scalar>*> params() {
    std::vector<neuro::ParamTensor<Scalar>*> out;
    for (auto& n : nets)
      for (auto* p : n.params()) out.push_back(p);
    for (auto* p : mixer.params()) out.push_back(p);
    return out;
  }

  void copy_values_from(QmixModel& other) {
    auto dst = params();
    auto src = other.params();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i]->value = src[i]->value;
  }

  // Forward-only probe of the mixer at one (state, per-agent utility) point.
  Scalar mix_value(const neuro::Vec<Scalar>& state, const neuro::Vec<Scalar>& q) {
    return mixer.forward(state, q)(0, 0);
  }

  std::vector<neuro::NamedTensor> to_tensors() {
    std::vector<neuro::NamedTensor> out;
    for (auto* p : params()) out.push_back(neuro::to_named(*p));
    return out;
  }

  void restore(const neuro::Checkpoint& ckpt) {
    for (auto* p : params()) neuro::restore_param(ckpt, *p);
  }
};

template <typename Scalar>
void one_hot_into(Eigen::Ref<neuro::Vec<Scalar>> dst, int action) {
  dst.setZero();
  if (action > 0) dst(action - 1) = Scalar(1);
}

template <typename Scalar>
struct ActionSelection {
  std::vector<int> actions;    // 0 = none, 1..N = active-user ordinal
  neuro::Mat<Scalar> hidden;   // hidden x n_agents, post-update
};

// One decision step for every agent. Busy agents (and everyone when no users
// are active) emit "none" and keep their hidden state; the rest run their
// network on (obs, one-hot last action) and act epsilon-greedily over the
// first n_active ordinals, so virtual users are never selected.
template <typename Scalar>
ActionSelection<Scalar> select_actions(QmixModel<Scalar>& model, const neuro::Mat<Scalar>& obs,
                                       const neuro::Mat<Scalar>& hidden,
                                       const std::vector<int>& u_prev,
                                       const std::vector<std::uint8_t>& busy, int n_active,
                                       double epsilon, simcore::RngStream& rng) {
  const int K = model.cfg.n_agents;
  ActionSelection<Scalar> out;
  out.actions.assign(static_cast<std::size_t>(K), 0);
  out.hidden = hidden;
  neuro::Mat<Scalar> x(model.cfg.agent_input(), 1);
  for (int k = 0; k < K; ++k) {
    if (busy[static_cast<std::size_t>(k)] || n_active == 0) continue;
    x.col(0).head(model.cfg.obs_width) = obs.col(k);
    one_hot_into<Scalar>(x.col(0).tail(model.cfg.max_users),
                         u_prev[static_cast<std::size_t>(k)]);
    auto res = model.slot_net(k).forward(x, hidden.col(k));
    out.hidden.col(k) = res.h.col(0);
    int pick;
    if (rng.uniform01() < epsilon) {
      pick = static_cast<int>(rng.uniform_int(n_active));
    } else {
      Eigen::Index best;
      res.q.col(0).head(n_active).maxCoeff(&best);
      pick = static_cast<int>(best);
    }
    out.actions[static_cast<std::size_t>(k)] = pick + 1;
  }
  return out;
}

}  // namespace marlsched::qmix
