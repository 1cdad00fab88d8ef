#include "reid/learner.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "reid/rng.hpp"

namespace reid {

namespace {

// Per-sample, pre-projection branch features: [sample][branch] -> C-vector.
std::vector<std::vector<std::vector<double>>> batch_features(
    const std::vector<TrainSample>& samples, const std::vector<int>& part_ratio) {
    std::vector<std::vector<std::vector<double>>> feats;
    feats.reserve(samples.size());
    const std::size_t height = samples.front().tracklet->frames.front().rows;
    const PartRanges ranges = split_rows(height, part_ratio);
    for (const TrainSample& s : samples) {
        s.tracklet->validate();
        if (s.tracklet->frames.front().rows != height) {
            throw std::invalid_argument("learner: tracklet height mismatch");
        }
        feats.push_back(pooled_branch_features(*s.tracklet, ranges));
    }
    return feats;
}

// Smoothed cross-entropy over all branches; gradients accumulated into
// `grads` when non-null. feats: [sample][branch][C]; labels: class indices.
double objective(const Model& m,
                 const std::vector<std::vector<std::vector<double>>>& feats,
                 const std::vector<std::size_t>& labels, double eps, Gradients* grads) {
    const std::size_t n_branches = m.n_branches();
    const std::size_t d = m.projections.d_emb();
    const std::size_t k_classes = m.n_classes();
    const std::size_t batch = feats.size();
    const double inv_batch = 1.0 / static_cast<double>(batch);

    double total_loss = 0.0;
    std::vector<double> z(d), logits(k_classes), prob(k_classes), dz(d);

    for (std::size_t b = 0; b < n_branches; ++b) {
        const Matrix& proj = m.projections.branches[b];
        const Matrix& w = m.classifiers[b];
        const std::vector<double>& bias = m.biases[b];

        for (std::size_t n = 0; n < batch; ++n) {
            const std::vector<double>& f = feats[n][b];

            std::fill(z.begin(), z.end(), 0.0);
            for (std::size_t c = 0; c < proj.rows; ++c) {
                const double fc = f[c];
                for (std::size_t j = 0; j < d; ++j) {
                    z[j] += fc * proj.at(c, j);
                }
            }
            for (std::size_t k = 0; k < k_classes; ++k) {
                double acc = bias[k];
                for (std::size_t j = 0; j < d; ++j) {
                    acc += z[j] * w.at(j, k);
                }
                logits[k] = acc;
            }

            const double max_logit = *std::max_element(logits.begin(), logits.end());
            double sum_exp = 0.0;
            for (std::size_t k = 0; k < k_classes; ++k) {
                prob[k] = std::exp(logits[k] - max_logit);
                sum_exp += prob[k];
            }
            const double log_sum = max_logit + std::log(sum_exp);
            for (std::size_t k = 0; k < k_classes; ++k) {
                prob[k] /= sum_exp;
            }

            // q_k = eps/K + (1-eps) on the true class; CE = logsumexp - q.l
            const std::size_t y = labels[n];
            double weighted_logit = 0.0;
            for (std::size_t k = 0; k < k_classes; ++k) {
                const double q = eps / static_cast<double>(k_classes) + (k == y ? 1.0 - eps : 0.0);
                weighted_logit += q * logits[k];
            }
            total_loss += (log_sum - weighted_logit) * inv_batch;

            if (grads) {
                std::fill(dz.begin(), dz.end(), 0.0);
                for (std::size_t k = 0; k < k_classes; ++k) {
                    const double q =
                        eps / static_cast<double>(k_classes) + (k == y ? 1.0 - eps : 0.0);
                    const double g = (prob[k] - q) * inv_batch;
                    grads->biases[b][k] += g;
                    for (std::size_t j = 0; j < d; ++j) {
                        grads->classifiers[b].at(j, k) += z[j] * g;
                        dz[j] += w.at(j, k) * g;
                    }
                }
                for (std::size_t c = 0; c < proj.rows; ++c) {
                    const double fc = f[c];
                    for (std::size_t j = 0; j < d; ++j) {
                        grads->projections[b].at(c, j) += fc * dz[j];
                    }
                }
            }
        }
    }
    return total_loss;
}

Gradients zero_gradients(const Model& m) {
    Gradients g;
    for (const Matrix& p : m.projections.branches) {
        g.projections.emplace_back(p.rows, p.cols);
    }
    for (const Matrix& w : m.classifiers) {
        g.classifiers.emplace_back(w.rows, w.cols);
    }
    for (const auto& b : m.biases) {
        g.biases.emplace_back(b.size(), 0.0);
    }
    return g;
}

}  // namespace

void LearnerConfig::validate() const {
    if (d_emb == 0) {
        throw std::invalid_argument("LearnerConfig: d_emb must be positive");
    }
    if (steps < 0) {
        throw std::invalid_argument("LearnerConfig: steps must be non-negative");
    }
    if (learning_rate <= 0.0) {
        throw std::invalid_argument("LearnerConfig: learning_rate must be positive");
    }
    if (label_smoothing < 0.0 || label_smoothing >= 1.0) {
        throw std::invalid_argument("LearnerConfig: label_smoothing must be in [0,1)");
    }
    if (part_ratio.empty()) {
        throw std::invalid_argument("LearnerConfig: empty part ratio");
    }
}

Model fit(const std::vector<TrainSample>& train, const LearnerConfig& cfg,
          std::vector<double>* loss_trace) {
    cfg.validate();
    if (train.empty()) {
        throw std::invalid_argument("fit: empty training set");
    }

    // Canonical order: ascending tracklet id.
    std::vector<TrainSample> samples = train;
    std::sort(samples.begin(), samples.end(), [](const TrainSample& a, const TrainSample& b) {
        return a.tracklet->id < b.tracklet->id;
    });

    const std::size_t channels = samples.front().tracklet->frames.front().channels;

    std::vector<IdentityId> classes;
    for (const TrainSample& s : samples) {
        classes.push_back(s.identity);
    }
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());

    Model m;
    m.kind = cfg.kind;
    m.classes = classes;
    m.projections.part_ratio = cfg.part_ratio;

    const std::size_t n_branches = cfg.part_ratio.size() + 1;

    if (cfg.kind == LearnerKind::ncm) {
        for (std::size_t b = 0; b < n_branches; ++b) {
            m.projections.branches.push_back(Matrix::identity_like(channels, cfg.d_emb));
        }
        m.projections.validate();
        return m;
    }

    // linear_softmax: seeded init, all parameters ~ N(0,1)/sqrt(C).
    std::mt19937_64 rng(splitmix64(cfg.seed));
    const double scale = 1.0 / std::sqrt(static_cast<double>(channels));
    const std::size_t k_classes = classes.size();

    for (std::size_t b = 0; b < n_branches; ++b) {
        Matrix p(channels, cfg.d_emb);
        for (double& v : p.data) {
            v = gaussian(rng) * scale;
        }
        m.projections.branches.push_back(std::move(p));
    }
    for (std::size_t b = 0; b < n_branches; ++b) {
        Matrix w(cfg.d_emb, k_classes);
        for (double& v : w.data) {
            v = gaussian(rng) * scale;
        }
        m.classifiers.push_back(std::move(w));
    }
    for (std::size_t b = 0; b < n_branches; ++b) {
        std::vector<double> bias(k_classes);
        for (double& v : bias) {
            v = gaussian(rng) * scale;
        }
        m.biases.push_back(std::move(bias));
    }
    m.projections.validate();

    std::map<IdentityId, std::size_t> class_index;
    for (std::size_t i = 0; i < classes.size(); ++i) {
        class_index[classes[i]] = i;
    }
    std::vector<std::size_t> labels;
    labels.reserve(samples.size());
    for (const TrainSample& s : samples) {
        labels.push_back(class_index.at(s.identity));
    }

    const auto feats = batch_features(samples, cfg.part_ratio);

    for (int step = 0; step < cfg.steps; ++step) {
        Gradients g = zero_gradients(m);
        const double loss = objective(m, feats, labels, cfg.label_smoothing, &g);
        if (loss_trace) {
            loss_trace->push_back(loss);
        }
        for (std::size_t b = 0; b < n_branches; ++b) {
            for (std::size_t i = 0; i < g.projections[b].data.size(); ++i) {
                m.projections.branches[b].data[i] -= cfg.learning_rate * g.projections[b].data[i];
            }
            for (std::size_t i = 0; i < g.classifiers[b].data.size(); ++i) {
                m.classifiers[b].data[i] -= cfg.learning_rate * g.classifiers[b].data[i];
            }
            for (std::size_t i = 0; i < g.biases[b].size(); ++i) {
                m.biases[b][i] -= cfg.learning_rate * g.biases[b][i];
            }
        }
    }
    return m;
}

Embedding embed(const Model& m, const Tracklet& t) {
    return aggregate_tracklet(t, m.projections);
}

std::map<TrackletId, Embedding> embed_dataset(const Dataset& data, const Model& m,
                                              bool normalize) {
    std::map<TrackletId, Embedding> out;
    for (const Tracklet& t : data.tracklets) {
        Embedding e = embed(m, t);
        if (normalize) {
            l2_normalize(e);
        }
        out[t.id] = std::move(e);
    }
    return out;
}

std::pair<double, Gradients> loss_and_grad(const Model& m,
                                           const std::vector<TrainSample>& batch,
                                           double label_smoothing) {
    if (m.kind != LearnerKind::linear_softmax) {
        throw std::invalid_argument("loss_and_grad: model has no classifier heads");
    }
    if (batch.empty()) {
        throw std::invalid_argument("loss_and_grad: empty batch");
    }
    if (label_smoothing < 0.0 || label_smoothing >= 1.0) {
        throw std::invalid_argument("loss_and_grad: label_smoothing must be in [0,1)");
    }

    std::vector<TrainSample> samples = batch;
    std::sort(samples.begin(), samples.end(), [](const TrainSample& a, const TrainSample& b) {
        return a.tracklet->id < b.tracklet->id;
    });

    std::map<IdentityId, std::size_t> class_index;
    for (std::size_t i = 0; i < m.classes.size(); ++i) {
        class_index[m.classes[i]] = i;
    }
    std::vector<std::size_t> labels;
    for (const TrainSample& s : samples) {
        auto it = class_index.find(s.identity);
        if (it == class_index.end()) {
            throw std::invalid_argument("loss_and_grad: identity " +
                                        std::to_string(s.identity) +
                                        " not in the model's class list");
        }
        labels.push_back(it->second);
    }

    const auto feats = batch_features(samples, m.projections.part_ratio);
    Gradients g = zero_gradients(m);
    const double loss = objective(m, feats, labels, label_smoothing, &g);
    return {loss, std::move(g)};
}

}  // namespace reid
