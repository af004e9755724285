#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "vulnassess/errors.hpp"
#include "vulnassess/model.hpp"

namespace vulnassess {

// ---------------------------------------------------------------------------
// reward machinery
// ---------------------------------------------------------------------------

struct RewardSpec {
    std::array<double, 4> weights{}; // indexed by severity label
};

/// Class weights from the midpoints of the CVSS 3.0 rating bands
/// (Low [0.1,3.9], Medium [4.0,6.9], High [7.0,8.9], Critical [9.0,10.0]).
inline RewardSpec class_weights() {
    constexpr std::array<std::pair<double, double>, 4> bands{
        {{0.1, 3.9}, {4.0, 6.9}, {7.0, 8.9}, {9.0, 10.0}}};
    RewardSpec spec;
    for (size_t i = 0; i < 4; ++i)
        spec.weights[i] = (bands[i].first + bands[i].second) / 2.0;
    return spec;
}

/// r = w[y]·p when the prediction is right, −w[y]·p when it is wrong; the
/// weight belongs to the true class so that missing a critical sample with
/// high confidence costs the most.
inline double reward(const RewardSpec &spec, int y, int y_hat, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidProbability(p);
    double w = spec.weights[static_cast<size_t>(y)];
    return y_hat == y ? w * p : -w * p;
}

struct BaselineState {
    double value = 0.0;
    double alpha = 0.7; // momentum attenuation coefficient
};

/// b_new = α·b_old + (1−α)·r̄
inline BaselineState update_baseline(BaselineState st, double mean_batch_reward) {
    st.value = st.alpha * st.value + (1.0 - st.alpha) * mean_batch_reward;
    return st;
}

/// Mean over the batch of −log π(ŷ|s)·(r − b). The advantage is a constant
/// with respect to the parameters; only the log-probability carries gradient.
inline double pg_loss(std::span<const double> log_probs, std::span<const double> rewards,
                      double baseline) {
    if (log_probs.size() != rewards.size()) throw LengthMismatch(log_probs.size(), rewards.size());
    if (log_probs.empty()) return 0.0;
    double sum = 0.0;
    for (size_t i = 0; i < log_probs.size(); ++i)
        sum += -log_probs[i] * (rewards[i] - baseline);
    return sum / static_cast<double>(log_probs.size());
}

struct LossBreakdown {
    double assessment = 0.0;
    double suggestion = 0.0;
    double pg = 0.0;
    double total = 0.0;
};

inline LossBreakdown total_loss(double l_assessment, double l_suggestion, double l_pg,
                                double lambda_pg) {
    return {l_assessment, l_suggestion, l_pg,
            l_assessment + l_suggestion + lambda_pg * l_pg};
}

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

struct TrainExample {
    HybridPrompt prompt;
    int label = 0;
    std::string reference; // reference repair suggestion
};

struct TrainerConfig {
    double lambda_pg = 0.01;
    double alpha = 0.7;
    int batch_size = 16;
    int epochs = 100;
    double learning_rate = 5e-5;
    uint64_t seed = 42;
    bool sample_actions = false; // default: argmax action, confidence = max probability
    enum class Optimizer { Sgd, Adam } optimizer = Optimizer::Sgd;
};

struct BatchRecord {
    int epoch = 0;
    int batch = 0;
    LossBreakdown losses;
    double mean_reward = 0.0;
    double baseline = 0.0;
};

struct TrainResult {
    ModelParams params;
    std::vector<BatchRecord> log;
};

namespace detail {

/// Projected features for a batch: row i holds P_featᵀ c_i. These depend only
/// on the frozen projection, so they are computed once.
struct EncodedBatch {
    Eigen::MatrixXd u_prompt; // B x H
    Eigen::MatrixXd u_ref;    // B x H
    std::vector<int> labels;
};

inline EncodedBatch encode_examples(const std::vector<TrainExample> &data,
                                    const ModelParams &params) {
    const int b = static_cast<int>(data.size());
    EncodedBatch enc;
    enc.u_prompt.resize(b, params.dims.hidden_dim);
    enc.u_ref.resize(b, params.dims.hidden_dim);
    enc.labels.resize(static_cast<size_t>(b));
    for (int i = 0; i < b; ++i) {
        auto pf = hash_ngrams(hybrid_tokens(data[static_cast<size_t>(i)].prompt),
                              params.dims.feature_dim, params.seed);
        auto rf = hash_ngrams(feature_tokens(data[static_cast<size_t>(i)].reference),
                              params.dims.feature_dim, params.seed);
        enc.u_prompt.row(i) = feature_projection(pf, params).transpose();
        enc.u_ref.row(i) = feature_projection(rf, params).transpose();
        enc.labels[static_cast<size_t>(i)] = data[static_cast<size_t>(i)].label;
    }
    return enc;
}

inline EncodedBatch take_rows(const EncodedBatch &all, std::span<const int> idx) {
    EncodedBatch out;
    out.u_prompt.resize(static_cast<long>(idx.size()), all.u_prompt.cols());
    out.u_ref.resize(static_cast<long>(idx.size()), all.u_ref.cols());
    out.labels.resize(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) {
        out.u_prompt.row(static_cast<long>(i)) = all.u_prompt.row(idx[i]);
        out.u_ref.row(static_cast<long>(i)) = all.u_ref.row(idx[i]);
        out.labels[i] = all.labels[static_cast<size_t>(idx[i])];
    }
    return out;
}

inline Eigen::MatrixXd row_softmax(const Eigen::MatrixXd &z) {
    Eigen::MatrixXd p = z;
    for (int i = 0; i < z.rows(); ++i) {
        double m = z.row(i).maxCoeff();
        p.row(i) = (z.row(i).array() - m).exp().matrix();
        p.row(i) /= p.row(i).sum();
    }
    return p;
}

struct Gradients {
    Eigen::VectorXd soft_prompt;
    Eigen::MatrixXd head_w;
    Eigen::Vector4d head_b;
    Eigen::MatrixXd sugg_bilinear;
};

/// Actions and advantages held constant while differentiating L_PG.
struct PgFreeze {
    std::vector<int> actions;
    std::vector<double> advantages;
};

struct BatchOutcome {
    LossBreakdown losses;
    std::vector<int> actions;
    std::vector<double> pred_probs; // π(ŷ)
    std::vector<double> rewards;
    double mean_reward = 0.0;
    Gradients grads;
};

/// One forward (and optionally backward) pass over a batch. When `freeze` is
/// given, its actions/advantages are used verbatim — the semantics of treating
/// the advantage as a constant — otherwise actions come from the current
/// policy and advantages from `spec` and `baseline`.
inline BatchOutcome run_batch(const ModelParams &params, const EncodedBatch &enc,
                              const RewardSpec &spec, double lambda_pg, double baseline,
                              const PgFreeze *freeze, std::mt19937_64 *rng, bool sample_actions,
                              bool want_grads) {
    const int b = static_cast<int>(enc.labels.size());

    Eigen::VectorXd q = params.soft_rows().transpose() * params.soft_prompt; // H
    Eigen::MatrixXd hm =
        (enc.u_prompt.rowwise() + q.transpose()).array().tanh().matrix(); // B x H
    Eigen::MatrixXd rm = (enc.u_ref.rowwise() + q.transpose()).array().tanh().matrix();

    Eigen::MatrixXd z = hm * params.head_w;
    z.rowwise() += params.head_b.transpose();
    Eigen::MatrixXd pm = row_softmax(z);

    BatchOutcome out;
    double l_a = 0.0;
    for (int i = 0; i < b; ++i)
        l_a += -std::log(pm(i, enc.labels[static_cast<size_t>(i)]));
    l_a /= b;

    Eigen::MatrixXd s_mat = hm * params.sugg_bilinear * rm.transpose(); // B x B
    Eigen::MatrixXd sm = row_softmax(s_mat);
    double l_s = 0.0;
    for (int i = 0; i < b; ++i) l_s += -std::log(sm(i, i));
    l_s /= b;

    // policy term
    std::vector<int> actions(static_cast<size_t>(b));
    std::vector<double> advantages(static_cast<size_t>(b));
    out.pred_probs.resize(static_cast<size_t>(b));
    if (freeze) {
        actions = freeze->actions;
        advantages = freeze->advantages;
        for (int i = 0; i < b; ++i)
            out.pred_probs[static_cast<size_t>(i)] = pm(i, actions[static_cast<size_t>(i)]);
    } else {
        out.rewards.resize(static_cast<size_t>(b));
        for (int i = 0; i < b; ++i) {
            int a = 0;
            if (sample_actions && rng) {
                double x = std::uniform_real_distribution<double>(0.0, 1.0)(*rng);
                double acc = 0.0;
                for (int c = 0; c < 4; ++c) {
                    acc += pm(i, c);
                    if (x < acc || c == 3) {
                        a = c;
                        break;
                    }
                }
            } else {
                for (int c = 1; c < 4; ++c)
                    if (pm(i, c) > pm(i, a)) a = c;
            }
            actions[static_cast<size_t>(i)] = a;
            double p = pm(i, a);
            out.pred_probs[static_cast<size_t>(i)] = p;
            double r = reward(spec, enc.labels[static_cast<size_t>(i)], a, p);
            out.rewards[static_cast<size_t>(i)] = r;
            advantages[static_cast<size_t>(i)] = r - baseline;
            out.mean_reward += r / b;
        }
    }
    std::vector<double> logp(static_cast<size_t>(b));
    for (int i = 0; i < b; ++i)
        logp[static_cast<size_t>(i)] = std::log(pm(i, actions[static_cast<size_t>(i)]));
    double l_pg = 0.0;
    for (int i = 0; i < b; ++i)
        l_pg += -logp[static_cast<size_t>(i)] * advantages[static_cast<size_t>(i)];
    l_pg /= b;

    out.losses = total_loss(l_a, l_s, l_pg, lambda_pg);
    out.actions = std::move(actions);

    if (!want_grads) return out;

    Eigen::MatrixXd delta_z(b, 4);
    for (int i = 0; i < b; ++i) {
        for (int c = 0; c < 4; ++c) {
            double y_ind = enc.labels[static_cast<size_t>(i)] == c ? 1.0 : 0.0;
            double a_ind = out.actions[static_cast<size_t>(i)] == c ? 1.0 : 0.0;
            delta_z(i, c) = (pm(i, c) - y_ind) / b +
                            lambda_pg * advantages[static_cast<size_t>(i)] * (pm(i, c) - a_ind) / b;
        }
    }

    Eigen::MatrixXd delta_s = sm;
    for (int i = 0; i < b; ++i) delta_s(i, i) -= 1.0;
    delta_s /= b;

    out.grads.head_w = hm.transpose() * delta_z;
    out.grads.head_b = delta_z.colwise().sum().transpose();
    out.grads.sugg_bilinear = hm.transpose() * delta_s * rm;

    Eigen::MatrixXd gh = delta_z * params.head_w.transpose() +
                         delta_s * (rm * params.sugg_bilinear.transpose()); // B x H
    Eigen::MatrixXd gr = delta_s.transpose() * (hm * params.sugg_bilinear); // B x H

    Eigen::MatrixXd pre_h = (gh.array() * (1.0 - hm.array().square())).matrix();
    Eigen::MatrixXd pre_r = (gr.array() * (1.0 - rm.array().square())).matrix();

    Eigen::VectorXd g_hidden =
        pre_h.colwise().sum().transpose() + pre_r.colwise().sum().transpose(); // H
    out.grads.soft_prompt = params.soft_rows() * g_hidden;                     // K
    return out;
}

} // namespace detail

/// Train the soft prompt and both heads with gradient descent on the
/// multi-task loss; the projection stays frozen. Deterministic per seed.
inline TrainResult train(const std::vector<TrainExample> &data, const TrainerConfig &cfg,
                         ModelParams init, const RewardSpec &spec = class_weights()) {
    if (data.empty()) throw EmptyDataset();
    for (const auto &ex : data)
        if (ex.label < 0 || ex.label > 3)
            throw Error("label " + std::to_string(ex.label) + " outside 0..3");

    TrainResult result{std::move(init), {}};
    ModelParams &params = result.params;
    auto enc = detail::encode_examples(data, params);

    std::mt19937_64 rng(cfg.seed);
    std::vector<int> order(data.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    BaselineState baseline{0.0, cfg.alpha};

    // adaptive-moment state (used only when configured)
    Eigen::VectorXd m_s, v_s;
    Eigen::MatrixXd m_w, v_w, m_u, v_u;
    Eigen::Vector4d m_b, v_b;
    if (cfg.optimizer == TrainerConfig::Optimizer::Adam) {
        m_s = Eigen::VectorXd::Zero(params.dims.soft_len);
        v_s = m_s;
        m_w = Eigen::MatrixXd::Zero(params.dims.hidden_dim, 4);
        v_w = m_w;
        m_u = Eigen::MatrixXd::Zero(params.dims.hidden_dim, params.dims.hidden_dim);
        v_u = m_u;
        m_b = Eigen::Vector4d::Zero();
        v_b = m_b;
    }
    long adam_t = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        int batch_index = 0;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
            size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
            auto batch = detail::take_rows(
                enc, std::span<const int>(order.data() + start, end - start));

            auto outcome =
                detail::run_batch(params, batch, spec, cfg.lambda_pg, baseline.value,
                                  /*freeze=*/nullptr, &rng, cfg.sample_actions, /*grads=*/true);
            if (!std::isfinite(outcome.losses.total)) throw NonFiniteLoss(epoch, batch_index);

            if (cfg.optimizer == TrainerConfig::Optimizer::Adam) {
                ++adam_t;
                const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
                auto step = [&](auto &theta, auto &m, auto &v, const auto &g) {
                    m = b1 * m + (1.0 - b1) * g;
                    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
                    double c1 = 1.0 - std::pow(b1, static_cast<double>(adam_t));
                    double c2 = 1.0 - std::pow(b2, static_cast<double>(adam_t));
                    theta.array() -=
                        cfg.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
                };
                step(params.soft_prompt, m_s, v_s, outcome.grads.soft_prompt);
                step(params.head_w, m_w, v_w, outcome.grads.head_w);
                step(params.head_b, m_b, v_b, outcome.grads.head_b);
                step(params.sugg_bilinear, m_u, v_u, outcome.grads.sugg_bilinear);
            } else {
                params.soft_prompt -= cfg.learning_rate * outcome.grads.soft_prompt;
                params.head_w -= cfg.learning_rate * outcome.grads.head_w;
                params.head_b -= cfg.learning_rate * outcome.grads.head_b;
                params.sugg_bilinear -= cfg.learning_rate * outcome.grads.sugg_bilinear;
            }

            baseline = update_baseline(baseline, outcome.mean_reward);
            result.log.push_back(
                {epoch, batch_index, outcome.losses, outcome.mean_reward, baseline.value});
            ++batch_index;
        }
    }
    return result;
}

/// Max relative error between analytic gradients of the total loss and
/// central finite differences, over the trainable tensors. Actions and
/// advantages are frozen at the center point, matching their constant
/// treatment in the loss. Coordinates where both sides are below 1e-6 in
/// magnitude are counted as exact (they carry no measurable signal).
inline double grad_check(const ModelParams &center, const std::vector<TrainExample> &batch,
                         double lambda_pg = 0.01, const RewardSpec &spec = class_weights(),
                         double eps = 1e-5, double baseline = 0.0) {
    auto enc = detail::encode_examples(batch, center);
    auto outcome = detail::run_batch(center, enc, spec, lambda_pg, baseline, nullptr, nullptr,
                                     false, /*grads=*/true);
    detail::PgFreeze freeze{outcome.actions, {}};
    freeze.advantages.resize(outcome.rewards.size());
    for (size_t i = 0; i < outcome.rewards.size(); ++i)
        freeze.advantages[i] = outcome.rewards[i] - baseline;

    auto loss_at = [&](const ModelParams &p) {
        return detail::run_batch(p, enc, spec, lambda_pg, baseline, &freeze, nullptr, false, false)
            .losses.total;
    };

    double max_rel = 0.0;
    auto check = [&](auto get_ref, const auto &analytic) {
        ModelParams p = center;
        auto &tensor = get_ref(p);
        for (long i = 0; i < tensor.size(); ++i) {
            double saved = tensor.data()[i];
            tensor.data()[i] = saved + eps;
            double up = loss_at(p);
            tensor.data()[i] = saved - eps;
            double down = loss_at(p);
            tensor.data()[i] = saved;
            double fd = (up - down) / (2.0 * eps);
            double an = analytic.data()[i];
            double denom = std::max(std::abs(fd), std::abs(an));
            if (denom > 1e-6) max_rel = std::max(max_rel, std::abs(fd - an) / denom);
        }
    };
    check([](ModelParams &p) -> Eigen::VectorXd & { return p.soft_prompt; },
          outcome.grads.soft_prompt);
    check([](ModelParams &p) -> Eigen::MatrixXd & { return p.head_w; }, outcome.grads.head_w);
    check([](ModelParams &p) -> Eigen::Vector4d & { return p.head_b; }, outcome.grads.head_b);
    check([](ModelParams &p) -> Eigen::MatrixXd & { return p.sugg_bilinear; },
          outcome.grads.sugg_bilinear);
    return max_rel;
}

/// Append-friendly line-delimited training log.
inline void write_training_log(const std::string &path, const std::vector<BatchRecord> &log) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    out.precision(17);
    for (const auto &r : log) {
        nlohmann::json j = {{"epoch", r.epoch},
                            {"batch", r.batch},
                            {"l_assessment", r.losses.assessment},
                            {"l_suggestion", r.losses.suggestion},
                            {"l_pg", r.losses.pg},
                            {"l_total", r.losses.total},
                            {"mean_reward", r.mean_reward},
                            {"baseline", r.baseline}};
        out << j.dump() << "\n";
    }
}

} // namespace vulnassess
