#include "labeldense/encoder.hpp"

#include <cmath>
#include <fstream>

#include "binio.hpp"
#include "json.hpp"
#include "labeldense/rng.hpp"
#include "labeldense/types.hpp"

namespace labeldense {

namespace {

// Xavier-uniform in (−a, a) with a = sqrt(6/(fan_in+fan_out)).
Mat xavier(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Mat w(fan_in, fan_out);
    for (auto& v : w.d) v = rng.uniform(-a, a);
    return w;
}

Mat activate(const Mat& z, Activation act) {
    if (act == Activation::Identity) return z;
    Mat h = z;
    for (auto& v : h.d) v = std::tanh(v);
    return h;
}

void add_row_bias(Mat& z, const Mat& b) {
    for (std::size_t i = 0; i < z.rows; ++i) {
        double* zi = z.row(i);
        for (std::size_t j = 0; j < z.cols; ++j) zi[j] += b.d[j];
    }
}

void write_tensor(std::ostream& os, const Mat& m) {
    for (double v : m.d) binio::put_f64(os, v);
}

Mat read_tensor(std::istream& is, std::size_t rows, std::size_t cols,
                const std::string& path) {
    Mat m(rows, cols);
    for (auto& v : m.d) v = binio::get_f64(is, path);
    return m;
}

}  // namespace

EncoderParams init_encoder(const EncoderDims& dims, uint64_t seed) {
    Rng rng(mix_seed(seed, 0x656e636f646572ULL));
    EncoderParams p;
    p.w1 = xavier(dims.in, dims.hidden, rng);
    p.b1 = Mat(1, dims.hidden, 0.0);
    p.w2 = xavier(dims.hidden, dims.out, rng);
    p.b2 = Mat(1, dims.out, 0.0);
    return p;
}

Classifier init_classifier(int feat_dim, int num_classes, uint64_t seed) {
    Rng rng(mix_seed(seed, 0x636c617373ULL));
    return Classifier{xavier(feat_dim, num_classes, rng)};
}

Mat encoder_forward(const EncoderParams& p, const Mat& x, ForwardCache* cache) {
    if (x.cols != p.w1.rows) throw Error("encoder input dim mismatch");
    Mat z = matmul(x, p.w1);
    add_row_bias(z, p.b1);
    Mat h = activate(z, p.activation);
    Mat f = matmul(h, p.w2);
    add_row_bias(f, p.b2);
    if (cache) {
        cache->hidden = std::move(h);
        cache->features = f;
    }
    return f;
}

Mat classify(const Classifier& clf, const Mat& f) {
    if (f.cols != clf.w.rows) throw Error("classifier input dim mismatch");
    return matmul(f, clf.w);
}

Grads backward(const EncoderParams& p, const Classifier& clf, const Mat& x,
               const Mat& dl_ds, const Mat& dl_df, const ForwardCache* cache) {
    ForwardCache local;
    if (!cache) {
        encoder_forward(p, x, &local);
        cache = &local;
    }
    const Mat& h = cache->hidden;
    const Mat& f = cache->features;
    const auto dims = p.dims();

    Grads g;
    g.w1 = Mat(p.w1.rows, p.w1.cols);
    g.b1 = Mat(1, p.b1.cols);
    g.w2 = Mat(p.w2.rows, p.w2.cols);
    g.b2 = Mat(1, p.b2.cols);
    g.clf_w = Mat(clf.w.rows, clf.w.cols);

    // accumulate into df: direct feature upstream plus classifier pullback
    Mat df(x.rows, static_cast<std::size_t>(dims.out), 0.0);
    if (!dl_df.empty()) {
        if (!dl_df.same_shape(df)) throw Error("dl_df shape mismatch");
        add_inplace(df, dl_df);
    }
    if (!dl_ds.empty()) {
        if (dl_ds.rows != x.rows || dl_ds.cols != clf.w.cols)
            throw Error("dl_ds shape mismatch");
        g.clf_w = matmul_tn(f, dl_ds);
        add_inplace(df, matmul_nt(dl_ds, clf.w));
    }

    g.w2 = matmul_tn(h, df);
    g.b2 = col_sums(df);

    Mat dh = matmul_nt(df, p.w2);
    if (p.activation == Activation::Tanh) {
        for (std::size_t i = 0; i < dh.d.size(); ++i) dh.d[i] *= 1.0 - h.d[i] * h.d[i];
    }
    g.w1 = matmul_tn(x, dh);
    g.b1 = col_sums(dh);
    return g;
}

AdamState init_adam(const EncoderParams& p, const Classifier& clf, double lr,
                    double weight_decay) {
    AdamState st;
    st.lr = lr;
    st.weight_decay = weight_decay;
    const auto zeros_like = [](const Mat& m) { return Mat(m.rows, m.cols, 0.0); };
    st.m = {zeros_like(p.w1), zeros_like(p.b1), zeros_like(p.w2), zeros_like(p.b2),
            zeros_like(clf.w)};
    st.v = st.m;
    return st;
}

void adam_step(AdamState& st, EncoderParams& p, Classifier& clf, const Grads& g) {
    st.step += 1;
    const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));

    Mat* params[5] = {&p.w1, &p.b1, &p.w2, &p.b2, &clf.w};
    const Mat* grads[5] = {&g.w1, &g.b1, &g.w2, &g.b2, &g.clf_w};
    Mat* ms[5] = {&st.m.w1, &st.m.b1, &st.m.w2, &st.m.b2, &st.m.clf_w};
    Mat* vs[5] = {&st.v.w1, &st.v.b1, &st.v.w2, &st.v.b2, &st.v.clf_w};

    for (int t = 0; t < 5; ++t) {
        Mat& param = *params[t];
        const Mat& grad = *grads[t];
        Mat& m = *ms[t];
        Mat& v = *vs[t];
        for (std::size_t i = 0; i < param.d.size(); ++i) {
            const double gi = grad.d[i];
            m.d[i] = st.beta1 * m.d[i] + (1.0 - st.beta1) * gi;
            v.d[i] = st.beta2 * v.d[i] + (1.0 - st.beta2) * gi * gi;
            const double mhat = m.d[i] / bc1;
            const double vhat = v.d[i] / bc2;
            param.d[i] -= st.lr * (mhat / (std::sqrt(vhat) + st.eps) +
                                   st.weight_decay * param.d[i]);
        }
    }
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open " + path + " for writing");
    const auto dims = ck.enc.dims();
    nlohmann::json header{
        {"format", "labeldense-ckpt-v1"},
        {"step", ck.step},
        {"in", dims.in},
        {"hidden", dims.hidden},
        {"out", dims.out},
        {"classes", static_cast<int>(ck.clf.w.cols)},
        {"centroids", ck.centroids ? static_cast<int>(ck.centroids->rows) : 0},
    };
    os << header.dump() << "\n";
    write_tensor(os, ck.enc.w1);
    write_tensor(os, ck.enc.b1);
    write_tensor(os, ck.enc.w2);
    write_tensor(os, ck.enc.b2);
    write_tensor(os, ck.clf.w);
    if (ck.centroids) write_tensor(os, *ck.centroids);
    if (!os) throw DataError("write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open " + path);
    std::string line;
    if (!std::getline(is, line)) throw DataError("missing checkpoint header in " + path);
    nlohmann::json header = nlohmann::json::parse(line, nullptr, false);
    if (header.is_discarded() || header.value("format", "") != "labeldense-ckpt-v1")
        throw DataError("not a labeldense checkpoint: " + path);

    const int in = header.at("in").get<int>();
    const int hidden = header.at("hidden").get<int>();
    const int out = header.at("out").get<int>();
    const int classes = header.at("classes").get<int>();
    const int k = header.at("centroids").get<int>();
    if (in <= 0 || hidden <= 0 || out <= 0 || classes <= 0 || k < 0)
        throw DataError("invalid checkpoint shapes in " + path);

    Checkpoint ck;
    ck.step = header.at("step").get<int64_t>();
    ck.enc.w1 = read_tensor(is, in, hidden, path);
    ck.enc.b1 = read_tensor(is, 1, hidden, path);
    ck.enc.w2 = read_tensor(is, hidden, out, path);
    ck.enc.b2 = read_tensor(is, 1, out, path);
    ck.clf.w = read_tensor(is, out, classes, path);
    if (k > 0) ck.centroids = read_tensor(is, k, out, path);
    return ck;
}

}  // namespace labeldense
