#include "divetrack/semantic.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "divetrack/errors.hpp"
#include "divetrack/rng.hpp"

namespace divetrack {

namespace {

using Vec = std::vector<double>;
using Mat = std::vector<double>; // dim*dim, row-major

Vec matvec(const Mat& m, const Vec& x) {
    const std::size_t d = x.size();
    Vec y(d, 0.0);
    for (std::size_t r = 0; r < d; ++r) {
        double acc = 0.0;
        const double* row = m.data() + r * d;
        for (std::size_t c = 0; c < d; ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
    return y;
}

Vec matvec_transposed(const Mat& m, const Vec& x) {
    const std::size_t d = x.size();
    Vec y(d, 0.0);
    for (std::size_t r = 0; r < d; ++r) {
        const double xr = x[r];
        const double* row = m.data() + r * d;
        for (std::size_t c = 0; c < d; ++c) y[c] += row[c] * xr;
    }
    return y;
}

double dot(const Vec& a, const Vec& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

void outer_acc(Mat& m, const Vec& u, const Vec& v) {
    const std::size_t d = u.size();
    for (std::size_t r = 0; r < d; ++r) {
        double* row = m.data() + r * d;
        const double ur = u[r];
        for (std::size_t c = 0; c < d; ++c) row[c] += ur * v[c];
    }
}

void add_scaled(Vec& y, const Vec& x, double s) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += s * x[i];
}

Vec softmax(const Vec& z) {
    double m = z[0];
    for (const double v : z) m = std::max(m, v);
    Vec p(z.size());
    double denom = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        p[i] = std::exp(z[i] - m);
        denom += p[i];
    }
    for (auto& v : p) v /= denom;
    return p;
}

struct ForwardCache {
    std::vector<Vec> m_prime, k1, v1;
    Vec q1, alpha, o1, h;
    std::vector<Vec> k2, v2;
    Vec q2, beta, o2, out;
};

void check_inputs(const SemanticHead& head, const std::vector<MemoryFeature>& memory_feats,
                  const std::vector<Embedding>& frame_feats) {
    if (memory_feats.empty() || frame_feats.empty()) {
        throw ContractViolation("tsl_forward: memory and frame features must be non-empty");
    }
    const std::size_t d = static_cast<std::size_t>(head.dim());
    for (const auto& m : memory_feats) {
        if (m.feat.dim() != d) {
            throw ContractViolation("tsl_forward: memory feature dim " +
                                    std::to_string(m.feat.dim()) + " != head dim " +
                                    std::to_string(d));
        }
        if (m.temporal_slot &&
            (*m.temporal_slot < 0 || *m.temporal_slot >= head.n_slots())) {
            throw ContractViolation("tsl_forward: temporal slot out of range");
        }
    }
    for (const auto& f : frame_feats) {
        if (f.dim() != d) {
            throw ContractViolation("tsl_forward: frame feature dim " +
                                    std::to_string(f.dim()) + " != head dim " +
                                    std::to_string(d));
        }
    }
}

ForwardCache run_forward(const SemanticHead& head, const std::vector<MemoryFeature>& memory_feats,
                         const std::vector<Embedding>& frame_feats) {
    check_inputs(head, memory_feats, frame_feats);
    const std::size_t d = static_cast<std::size_t>(head.dim());
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    ForwardCache c;

    // Stage 1: CLS attends over memory features.
    c.m_prime.reserve(memory_feats.size());
    for (const auto& m : memory_feats) {
        Vec mp = m.feat.values();
        if (m.temporal_slot) {
            const auto& t = head.temporal_embeddings()[static_cast<std::size_t>(*m.temporal_slot)];
            for (std::size_t i = 0; i < d; ++i) mp[i] += t[i];
        }
        c.m_prime.push_back(std::move(mp));
    }
    c.q1 = matvec(head.attn1().wq, head.cls_token());
    Vec scores1(c.m_prime.size());
    for (std::size_t i = 0; i < c.m_prime.size(); ++i) {
        c.k1.push_back(matvec(head.attn1().wk, c.m_prime[i]));
        c.v1.push_back(matvec(head.attn1().wv, c.m_prime[i]));
        scores1[i] = dot(c.q1, c.k1[i]) * scale;
    }
    c.alpha = softmax(scores1);
    c.o1.assign(d, 0.0);
    for (std::size_t i = 0; i < c.v1.size(); ++i) add_scaled(c.o1, c.v1[i], c.alpha[i]);
    c.h = head.cls_token();
    const Vec wo1_o1 = matvec(head.attn1().wo, c.o1);
    for (std::size_t i = 0; i < d; ++i) c.h[i] += wo1_o1[i];

    // Stage 2: cross-attention to current-frame features.
    c.q2 = matvec(head.attn2().wq, c.h);
    Vec scores2(frame_feats.size());
    for (std::size_t j = 0; j < frame_feats.size(); ++j) {
        c.k2.push_back(matvec(head.attn2().wk, frame_feats[j].values()));
        c.v2.push_back(matvec(head.attn2().wv, frame_feats[j].values()));
        scores2[j] = dot(c.q2, c.k2[j]) * scale;
    }
    c.beta = softmax(scores2);
    c.o2.assign(d, 0.0);
    for (std::size_t j = 0; j < c.v2.size(); ++j) add_scaled(c.o2, c.v2[j], c.beta[j]);
    c.out = c.h;
    const Vec wo2_o2 = matvec(head.attn2().wo, c.o2);
    for (std::size_t i = 0; i < d; ++i) c.out[i] += wo2_o2[i];
    return c;
}

} // namespace

SemanticHead::SemanticHead(int dim, int n_slots, std::uint64_t seed)
    : dim_(dim), n_slots_(n_slots), seed_(seed) {
    if (dim < 1) throw ContractViolation("semantic head dim must be >= 1");
    if (n_slots < 0) throw ContractViolation("semantic head slot count must be >= 0");

    std::mt19937_64 rng(seed);
    const auto fill = [&](std::vector<double>& v, std::size_t n) {
        v.resize(n);
        for (auto& x : v) x = normal_double(rng, 0.0, 0.02);
    };
    const std::size_t d = static_cast<std::size_t>(dim);
    fill(cls_token_, d);
    fill(attn1_.wq, d * d);
    fill(attn1_.wk, d * d);
    fill(attn1_.wv, d * d);
    fill(attn1_.wo, d * d);
    fill(attn2_.wq, d * d);
    fill(attn2_.wk, d * d);
    fill(attn2_.wv, d * d);
    fill(attn2_.wo, d * d);
    temporal_.assign(static_cast<std::size_t>(n_slots), std::vector<double>(d, 0.0));
}

Embedding tsl_forward(const SemanticHead& head, const std::vector<MemoryFeature>& memory_feats,
                      const std::vector<Embedding>& frame_feats) {
    return Embedding(run_forward(head, memory_feats, frame_feats).out);
}

std::size_t CategoryRegistry::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) return i;
    }
    throw ContractViolation("category '" + name + "' not in registry");
}

CategoryRegistry CategoryRegistry::seeded_random(std::vector<std::string> names, int dim,
                                                 std::uint64_t seed) {
    if (names.empty()) throw ContractViolation("registry needs at least one category");
    if (dim < 1) throw ContractViolation("registry dim must be >= 1");

    std::mt19937_64 rng(seed);
    std::vector<Embedding> embs;
    embs.reserve(names.size());
    for (std::size_t k = 0; k < names.size(); ++k) {
        std::vector<double> v(static_cast<std::size_t>(dim));
        double norm_sq = 0.0;
        do {
            norm_sq = 0.0;
            for (auto& x : v) {
                x = normal_double(rng);
                norm_sq += x * x;
            }
        } while (norm_sq == 0.0);
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (auto& x : v) x *= inv;
        embs.emplace_back(std::move(v));
    }
    return from_vectors(std::move(names), std::move(embs), false);
}

CategoryRegistry CategoryRegistry::from_vectors(std::vector<std::string> names,
                                                std::vector<Embedding> embeddings,
                                                bool normalize) {
    if (names.empty()) throw ContractViolation("registry needs at least one category");
    if (names.size() != embeddings.size()) {
        throw ContractViolation("registry: name and embedding counts differ");
    }
    for (std::size_t i = 0; i < names.size(); ++i) {
        for (std::size_t j = i + 1; j < names.size(); ++j) {
            if (names[i] == names[j]) {
                throw ContractViolation("registry: duplicate category '" + names[i] + "'");
            }
        }
    }
    const int dim = static_cast<int>(embeddings.front().dim());
    for (auto& e : embeddings) {
        if (static_cast<int>(e.dim()) != dim) {
            throw ContractViolation("registry: embeddings have mixed dims");
        }
        double norm_sq = 0.0;
        for (std::size_t i = 0; i < e.dim(); ++i) norm_sq += e[i] * e[i];
        const double norm = std::sqrt(norm_sq);
        if (normalize) {
            if (norm == 0.0) throw DegenerateInput("registry: zero embedding cannot be normalized");
            std::vector<double> v = e.values();
            for (auto& x : v) x /= norm;
            e = Embedding(std::move(v));
        } else if (std::abs(norm - 1.0) > 1e-9) {
            throw ContractViolation("registry: embedding norm " + std::to_string(norm) +
                                    " not unit");
        }
    }
    return CategoryRegistry(std::move(names), std::move(embeddings), dim);
}

CategoryRegistry CategoryRegistry::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::string> names;
    std::vector<Embedding> embs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string name;
        if (!(ls >> name)) continue;
        std::vector<double> v;
        double x;
        while (ls >> x) v.push_back(x);
        if (v.empty()) throw CorruptData("registry line for '" + name + "' has no vector");
        names.push_back(std::move(name));
        embs.emplace_back(std::move(v));
    }
    if (names.empty()) throw CorruptData("registry file " + path.string() + " is empty");
    return from_vectors(std::move(names), std::move(embs), true);
}

void CategoryRegistry::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.precision(17);
    for (std::size_t k = 0; k < names_.size(); ++k) {
        out << names_[k];
        for (std::size_t i = 0; i < embeddings_[k].dim(); ++i) out << ' ' << embeddings_[k][i];
        out << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

HeadGradients tsl_backward(const SemanticHead& head,
                           const std::vector<MemoryFeature>& memory_feats,
                           const std::vector<Embedding>& frame_feats,
                           const CategoryRegistry& registry, std::size_t positive_index,
                           double tau) {
    if (registry.size() == 0 || positive_index >= registry.size()) {
        throw ContractViolation("tsl_backward: positive index out of range");
    }
    if (!(tau > 0.0)) throw ContractViolation("tsl_backward: tau must be positive");
    if (registry.dim() != head.dim()) {
        throw ContractViolation("tsl_backward: registry dim != head dim");
    }

    const std::size_t d = static_cast<std::size_t>(head.dim());
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    const ForwardCache c = run_forward(head, memory_feats, frame_feats);

    // Loss on the attended output.
    const std::size_t k_count = registry.size();
    const double out_norm = std::sqrt(dot(c.out, c.out));
    if (out_norm == 0.0) throw DegenerateInput("tsl_backward: attended output is all-zero");
    Vec sims(k_count), logits(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
        const auto& t = registry.embeddings()[k].values();
        const double t_norm = std::sqrt(dot(t, t));
        sims[k] = dot(c.out, t) / (out_norm * t_norm);
        logits[k] = sims[k] / tau;
    }
    const Vec p = softmax(logits);
    double max_logit = logits[0];
    for (const double z : logits) max_logit = std::max(max_logit, z);
    double denom = 0.0;
    for (const double z : logits) denom += std::exp(z - max_logit);

    HeadGradients g;
    g.loss = -(logits[positive_index] - max_logit) + std::log(denom);
    g.cls_token.assign(d, 0.0);
    const auto zero_mat = Mat(d * d, 0.0);
    g.attn1 = {zero_mat, zero_mat, zero_mat, zero_mat};
    g.attn2 = {zero_mat, zero_mat, zero_mat, zero_mat};
    g.temporal_embeddings.assign(head.temporal_embeddings().size(), Vec(d, 0.0));

    // d(loss)/d(out) through softmax and cosine.
    Vec g_out(d, 0.0);
    for (std::size_t k = 0; k < k_count; ++k) {
        const double gz = p[k] - (k == positive_index ? 1.0 : 0.0);
        if (gz == 0.0) continue;
        const auto& t = registry.embeddings()[k].values();
        const double t_norm = std::sqrt(dot(t, t));
        // d cos(out, t)/d out = t/(|out||t|) - cos * out/|out|^2
        for (std::size_t i = 0; i < d; ++i) {
            const double dcos = t[i] / (out_norm * t_norm) - sims[k] * c.out[i] / (out_norm * out_norm);
            g_out[i] += gz * dcos / tau;
        }
    }

    // Stage 2 backward.
    Vec g_h = g_out; // residual path
    outer_acc(g.attn2.wo, g_out, c.o2);
    const Vec g_o2 = matvec_transposed(head.attn2().wo, g_out);

    const std::size_t n_frame = frame_feats.size();
    Vec g_beta(n_frame);
    for (std::size_t j = 0; j < n_frame; ++j) g_beta[j] = dot(c.v2[j], g_o2);
    double beta_dot = 0.0;
    for (std::size_t j = 0; j < n_frame; ++j) beta_dot += c.beta[j] * g_beta[j];
    Vec g_q2(d, 0.0);
    for (std::size_t j = 0; j < n_frame; ++j) {
        const double g_b = c.beta[j] * (g_beta[j] - beta_dot);
        add_scaled(g_q2, c.k2[j], g_b * scale);
        // g_k2_j and g_v2_j flow into the projections applied to frame feats.
        Vec g_k2(d);
        for (std::size_t i = 0; i < d; ++i) g_k2[i] = g_b * scale * c.q2[i];
        outer_acc(g.attn2.wk, g_k2, frame_feats[j].values());
        Vec g_v2(d);
        for (std::size_t i = 0; i < d; ++i) g_v2[i] = c.beta[j] * g_o2[i];
        outer_acc(g.attn2.wv, g_v2, frame_feats[j].values());
    }
    outer_acc(g.attn2.wq, g_q2, c.h);
    {
        const Vec back = matvec_transposed(head.attn2().wq, g_q2);
        for (std::size_t i = 0; i < d; ++i) g_h[i] += back[i];
    }

    // Stage 1 backward.
    for (std::size_t i = 0; i < d; ++i) g.cls_token[i] += g_h[i]; // residual path
    outer_acc(g.attn1.wo, g_h, c.o1);
    const Vec g_o1 = matvec_transposed(head.attn1().wo, g_h);

    const std::size_t n_mem = memory_feats.size();
    Vec g_alpha(n_mem);
    for (std::size_t i = 0; i < n_mem; ++i) g_alpha[i] = dot(c.v1[i], g_o1);
    double alpha_dot = 0.0;
    for (std::size_t i = 0; i < n_mem; ++i) alpha_dot += c.alpha[i] * g_alpha[i];
    Vec g_q1(d, 0.0);
    for (std::size_t i = 0; i < n_mem; ++i) {
        const double g_a = c.alpha[i] * (g_alpha[i] - alpha_dot);
        add_scaled(g_q1, c.k1[i], g_a * scale);

        Vec g_k1(d), g_v1(d);
        for (std::size_t r = 0; r < d; ++r) {
            g_k1[r] = g_a * scale * c.q1[r];
            g_v1[r] = c.alpha[i] * g_o1[r];
        }
        outer_acc(g.attn1.wk, g_k1, c.m_prime[i]);
        outer_acc(g.attn1.wv, g_v1, c.m_prime[i]);

        if (memory_feats[i].temporal_slot) {
            auto& slot_grad =
                g.temporal_embeddings[static_cast<std::size_t>(*memory_feats[i].temporal_slot)];
            const Vec via_k = matvec_transposed(head.attn1().wk, g_k1);
            const Vec via_v = matvec_transposed(head.attn1().wv, g_v1);
            for (std::size_t r = 0; r < d; ++r) slot_grad[r] += via_k[r] + via_v[r];
        }
    }
    outer_acc(g.attn1.wq, g_q1, head.cls_token());
    {
        const Vec back = matvec_transposed(head.attn1().wq, g_q1);
        for (std::size_t i = 0; i < d; ++i) g.cls_token[i] += back[i];
    }
    return g;
}

TrainResult train_head(SemanticHead& head, const std::vector<TrainSample>& dataset,
                       const CategoryRegistry& registry, int steps, double lr, double tau) {
    if (steps < 0) throw ContractViolation("train_head: steps must be >= 0");
    if (lr < 0.0) throw ContractViolation("train_head: learning rate must be >= 0");

    TrainResult result;
    if (dataset.empty()) return result;

    std::vector<std::size_t> positives;
    positives.reserve(dataset.size());
    for (const auto& s : dataset) positives.push_back(registry.index_of(s.category));

    const std::size_t d = static_cast<std::size_t>(head.dim());
    for (int step = 0; step < steps; ++step) {
        HeadGradients total;
        total.cls_token.assign(d, 0.0);
        const auto zero_mat = std::vector<double>(d * d, 0.0);
        total.attn1 = {zero_mat, zero_mat, zero_mat, zero_mat};
        total.attn2 = {zero_mat, zero_mat, zero_mat, zero_mat};
        total.temporal_embeddings.assign(head.temporal_embeddings().size(),
                                         std::vector<double>(d, 0.0));
        double loss_sum = 0.0;
        for (std::size_t s = 0; s < dataset.size(); ++s) {
            const HeadGradients g = tsl_backward(head, dataset[s].memory_feats,
                                                 dataset[s].frame_feats, registry, positives[s],
                                                 tau);
            loss_sum += g.loss;
            const auto acc = [](std::vector<double>& dst, const std::vector<double>& src) {
                for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
            };
            acc(total.cls_token, g.cls_token);
            acc(total.attn1.wq, g.attn1.wq);
            acc(total.attn1.wk, g.attn1.wk);
            acc(total.attn1.wv, g.attn1.wv);
            acc(total.attn1.wo, g.attn1.wo);
            acc(total.attn2.wq, g.attn2.wq);
            acc(total.attn2.wk, g.attn2.wk);
            acc(total.attn2.wv, g.attn2.wv);
            acc(total.attn2.wo, g.attn2.wo);
            for (std::size_t t = 0; t < total.temporal_embeddings.size(); ++t) {
                acc(total.temporal_embeddings[t], g.temporal_embeddings[t]);
            }
        }
        const double mean_loss = loss_sum / static_cast<double>(dataset.size());
        if (!std::isfinite(mean_loss)) {
            throw TrainingError(step, "loss is not finite");
        }
        result.loss_curve.push_back(mean_loss);

        const double rate = lr / static_cast<double>(dataset.size());
        const auto apply = [rate](std::vector<double>& param, const std::vector<double>& grad) {
            for (std::size_t i = 0; i < param.size(); ++i) param[i] -= rate * grad[i];
        };
        apply(head.cls_token(), total.cls_token);
        apply(head.attn1().wq, total.attn1.wq);
        apply(head.attn1().wk, total.attn1.wk);
        apply(head.attn1().wv, total.attn1.wv);
        apply(head.attn1().wo, total.attn1.wo);
        apply(head.attn2().wq, total.attn2.wq);
        apply(head.attn2().wk, total.attn2.wk);
        apply(head.attn2().wv, total.attn2.wv);
        apply(head.attn2().wo, total.attn2.wo);
        for (std::size_t t = 0; t < head.temporal_embeddings().size(); ++t) {
            apply(head.temporal_embeddings()[t], total.temporal_embeddings[t]);
        }
    }
    return result;
}

namespace {

void write_array(std::ofstream& out, const char* name, const std::vector<double>& v) {
    out << name;
    for (const double x : v) out << ' ' << x;
    out << '\n';
}

std::vector<double> read_array(std::istream& in, const std::string& expected,
                               std::size_t count) {
    std::string name;
    if (!(in >> name) || name != expected) {
        throw CorruptData("head checkpoint: expected array '" + expected + "'");
    }
    std::vector<double> v(count);
    for (auto& x : v) {
        if (!(in >> x)) throw CorruptData("head checkpoint: truncated array '" + expected + "'");
    }
    return v;
}

} // namespace

void save_head(const SemanticHead& head, const std::filesystem::path& path, int k_categories) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.precision(17);
    out << "divetrack-head 1\n";
    out << "dim " << head.dim() << '\n';
    out << "categories " << k_categories << '\n';
    out << "slots " << head.n_slots() << '\n';
    out << "seed " << head.seed() << '\n';
    write_array(out, "cls", head.cls_token());
    write_array(out, "wq1", head.attn1().wq);
    write_array(out, "wk1", head.attn1().wk);
    write_array(out, "wv1", head.attn1().wv);
    write_array(out, "wo1", head.attn1().wo);
    write_array(out, "wq2", head.attn2().wq);
    write_array(out, "wk2", head.attn2().wk);
    write_array(out, "wv2", head.attn2().wv);
    write_array(out, "wo2", head.attn2().wo);
    for (int s = 0; s < head.n_slots(); ++s) {
        write_array(out, ("temporal" + std::to_string(s)).c_str(),
                    head.temporal_embeddings()[static_cast<std::size_t>(s)]);
    }
    if (!out) throw IoError("failed writing " + path.string());
}

LoadedHead load_head(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != "divetrack-head" || version != 1) {
        throw CorruptData("head checkpoint: bad magic/version in " + path.string());
    }
    const auto read_int = [&](const char* key) {
        std::string name;
        long long value = 0;
        if (!(in >> name >> value) || name != key) {
            throw CorruptData("head checkpoint: expected field '" + std::string(key) + "'");
        }
        return value;
    };
    const int dim = static_cast<int>(read_int("dim"));
    const int k_categories = static_cast<int>(read_int("categories"));
    const int slots = static_cast<int>(read_int("slots"));
    const std::uint64_t seed = static_cast<std::uint64_t>(read_int("seed"));
    if (dim < 1 || slots < 0) throw CorruptData("head checkpoint: bad dimensions");

    SemanticHead head(dim, slots, seed);
    const std::size_t d = static_cast<std::size_t>(dim);
    head.cls_token() = read_array(in, "cls", d);
    head.attn1().wq = read_array(in, "wq1", d * d);
    head.attn1().wk = read_array(in, "wk1", d * d);
    head.attn1().wv = read_array(in, "wv1", d * d);
    head.attn1().wo = read_array(in, "wo1", d * d);
    head.attn2().wq = read_array(in, "wq2", d * d);
    head.attn2().wk = read_array(in, "wk2", d * d);
    head.attn2().wv = read_array(in, "wv2", d * d);
    head.attn2().wo = read_array(in, "wo2", d * d);
    for (int s = 0; s < slots; ++s) {
        head.temporal_embeddings()[static_cast<std::size_t>(s)] =
            read_array(in, "temporal" + std::to_string(s), d);
    }
    return LoadedHead{std::move(head), k_categories};
}

} // namespace divetrack
