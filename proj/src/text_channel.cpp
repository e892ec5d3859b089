#include "memefuse/text_channel.hpp"

#include <cmath>

#include "memefuse/error.hpp"

namespace memefuse {

namespace {

// d(sigmoid)/dpre from the activation value
Tensor sigmoid_grad(const Tensor& act, const Tensor& upstream) {
    Tensor out(act.shape());
    for (std::size_t i = 0; i < act.size(); ++i) out[i] = upstream[i] * act[i] * (1.0 - act[i]);
    return out;
}

// d(tanh)/dpre from the activation value
Tensor tanh_grad(const Tensor& act, const Tensor& upstream) {
    Tensor out(act.shape());
    for (std::size_t i = 0; i < act.size(); ++i) out[i] = upstream[i] * (1.0 - act[i] * act[i]);
    return out;
}

double init_scale(std::size_t fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); }

}  // namespace

// ---- LSTM ----

LstmCellParams LstmCellParams::init(std::size_t hidden, std::size_t input, Rng& rng) {
    LstmCellParams p;
    std::size_t joint = hidden + input;
    double s = init_scale(joint);
    p.w_forget = init_uniform(rng, {hidden, joint}, s);
    p.w_input = init_uniform(rng, {hidden, joint}, s);
    p.w_output = init_uniform(rng, {hidden, joint}, s);
    p.w_cand = init_uniform(rng, {hidden, joint}, s);
    p.b_forget = Tensor({hidden});
    p.b_input = Tensor({hidden});
    p.b_output = Tensor({hidden});
    p.b_cand = Tensor({hidden});
    return p;
}

LstmCellParams LstmCellParams::zeros(std::size_t hidden, std::size_t input) {
    LstmCellParams p;
    std::size_t joint = hidden + input;
    p.w_forget = Tensor({hidden, joint});
    p.w_input = Tensor({hidden, joint});
    p.w_output = Tensor({hidden, joint});
    p.w_cand = Tensor({hidden, joint});
    p.b_forget = Tensor({hidden});
    p.b_input = Tensor({hidden});
    p.b_output = Tensor({hidden});
    p.b_cand = Tensor({hidden});
    return p;
}

void LstmCellParams::check_consistent() const {
    std::size_t h = hidden();
    for (const Tensor* w : {&w_forget, &w_input, &w_output, &w_cand}) {
        if (w->rank() != 2 || w->dim(0) != h || w->dim(1) <= h) {
            throw ShapeError("lstm cell: weight shape " + shape_str(*w) +
                             " inconsistent with hidden size " + std::to_string(h));
        }
        if (w->dim(1) != w_forget.dim(1)) {
            throw ShapeError("lstm cell: inconsistent joint dims");
        }
    }
    for (const Tensor* b : {&b_input, &b_output, &b_cand}) {
        if (b->size() != h) throw ShapeError("lstm cell: inconsistent bias sizes");
    }
}

LstmState lstm_step(const LstmCellParams& p, const LstmState& prev, const Tensor& x,
                    LstmStepCache* cache) {
    if (prev.h.size() != p.hidden() || x.size() != p.input_dim()) {
        throw ShapeError("lstm_step: state " + shape_str(prev.h) + " / input " + shape_str(x) +
                         " vs cell expecting h=" + std::to_string(p.hidden()) +
                         ", d=" + std::to_string(p.input_dim()));
    }
    Tensor joint = concat(prev.h, x, 0);
    Tensor f = sigmoid(add(matvec(p.w_forget, joint), p.b_forget));
    Tensor i = sigmoid(add(matvec(p.w_input, joint), p.b_input));
    Tensor o = sigmoid(add(matvec(p.w_output, joint), p.b_output));
    Tensor g = tanh(add(matvec(p.w_cand, joint), p.b_cand));
    Tensor c = add(hadamard(f, prev.c), hadamard(i, g));
    Tensor tc = tanh(c);
    Tensor h = hadamard(o, tc);
    if (cache) {
        cache->joint = joint;
        cache->f = f;
        cache->i = i;
        cache->o = o;
        cache->g = g;
        cache->c_prev = prev.c;
        cache->c = c;
        cache->tanh_c = tc;
    }
    return {std::move(h), std::move(c)};
}

LstmStepInputGrads lstm_step_backward(const LstmCellParams& p, const LstmStepCache& cache,
                                      const Tensor& dh, const Tensor& dc_in, LstmCellParams& pg) {
    std::size_t h = p.hidden();
    Tensor d_o = hadamard(dh, cache.tanh_c);
    Tensor dc = dc_in;
    for (std::size_t k = 0; k < h; ++k) {
        dc[k] += dh[k] * cache.o[k] * (1.0 - cache.tanh_c[k] * cache.tanh_c[k]);
    }
    Tensor df = hadamard(dc, cache.c_prev);
    Tensor di = hadamard(dc, cache.g);
    Tensor dg = hadamard(dc, cache.i);
    Tensor dc_prev = hadamard(dc, cache.f);

    Tensor pre_f = sigmoid_grad(cache.f, df);
    Tensor pre_i = sigmoid_grad(cache.i, di);
    Tensor pre_o = sigmoid_grad(cache.o, d_o);
    Tensor pre_g = tanh_grad(cache.g, dg);

    add_outer(pg.w_forget, pre_f, cache.joint);
    add_outer(pg.w_input, pre_i, cache.joint);
    add_outer(pg.w_output, pre_o, cache.joint);
    add_outer(pg.w_cand, pre_g, cache.joint);
    add_in_place(pg.b_forget, pre_f);
    add_in_place(pg.b_input, pre_i);
    add_in_place(pg.b_output, pre_o);
    add_in_place(pg.b_cand, pre_g);

    Tensor djoint = matvec_transposed(p.w_forget, pre_f);
    add_in_place(djoint, matvec_transposed(p.w_input, pre_i));
    add_in_place(djoint, matvec_transposed(p.w_output, pre_o));
    add_in_place(djoint, matvec_transposed(p.w_cand, pre_g));

    return {slice1d(djoint, 0, h), std::move(dc_prev), slice1d(djoint, h, djoint.size())};
}

// ---- GRU ----

GruCellParams GruCellParams::init(std::size_t hidden, std::size_t input, Rng& rng) {
    GruCellParams p;
    std::size_t joint = hidden + input;
    double s = init_scale(joint);
    p.w_update = init_uniform(rng, {hidden, joint}, s);
    p.w_reset = init_uniform(rng, {hidden, joint}, s);
    p.w_cand = init_uniform(rng, {hidden, joint}, s);
    p.b_update = Tensor({hidden});
    p.b_reset = Tensor({hidden});
    p.b_cand = Tensor({hidden});
    return p;
}

GruCellParams GruCellParams::zeros(std::size_t hidden, std::size_t input) {
    GruCellParams p;
    std::size_t joint = hidden + input;
    p.w_update = Tensor({hidden, joint});
    p.w_reset = Tensor({hidden, joint});
    p.w_cand = Tensor({hidden, joint});
    p.b_update = Tensor({hidden});
    p.b_reset = Tensor({hidden});
    p.b_cand = Tensor({hidden});
    return p;
}

void GruCellParams::check_consistent() const {
    std::size_t h = hidden();
    for (const Tensor* w : {&w_update, &w_reset, &w_cand}) {
        if (w->rank() != 2 || w->dim(0) != h || w->dim(1) <= h ||
            w->dim(1) != w_update.dim(1)) {
            throw ShapeError("gru cell: weight shape " + shape_str(*w) +
                             " inconsistent with hidden size " + std::to_string(h));
        }
    }
    if (b_reset.size() != h || b_cand.size() != h) {
        throw ShapeError("gru cell: inconsistent bias sizes");
    }
}

Tensor gru_step(const GruCellParams& p, const Tensor& h_prev, const Tensor& x,
                GruStepCache* cache) {
    if (h_prev.size() != p.hidden() || x.size() != p.input_dim()) {
        throw ShapeError("gru_step: state " + shape_str(h_prev) + " / input " + shape_str(x) +
                         " vs cell expecting h=" + std::to_string(p.hidden()) +
                         ", d=" + std::to_string(p.input_dim()));
    }
    Tensor joint = concat(h_prev, x, 0);
    Tensor z = sigmoid(add(matvec(p.w_update, joint), p.b_update));
    Tensor r = sigmoid(add(matvec(p.w_reset, joint), p.b_reset));
    Tensor joint_r = concat(hadamard(r, h_prev), x, 0);
    Tensor g = tanh(add(matvec(p.w_cand, joint_r), p.b_cand));
    Tensor h(h_prev.shape());
    for (std::size_t k = 0; k < h.size(); ++k) {
        h[k] = (1.0 - z[k]) * h_prev[k] + z[k] * g[k];
    }
    if (cache) {
        cache->h_prev = h_prev;
        cache->joint = joint;
        cache->z = z;
        cache->r = r;
        cache->joint_r = joint_r;
        cache->g = g;
    }
    return h;
}

GruStepInputGrads gru_step_backward(const GruCellParams& p, const GruStepCache& cache,
                                    const Tensor& dh, GruCellParams& pg) {
    std::size_t h = p.hidden();
    Tensor dg = hadamard(dh, cache.z);
    Tensor dz(cache.z.shape());
    Tensor dh_prev(cache.h_prev.shape());
    for (std::size_t k = 0; k < h; ++k) {
        dz[k] = dh[k] * (cache.g[k] - cache.h_prev[k]);
        dh_prev[k] = dh[k] * (1.0 - cache.z[k]);
    }

    Tensor pre_g = tanh_grad(cache.g, dg);
    add_outer(pg.w_cand, pre_g, cache.joint_r);
    add_in_place(pg.b_cand, pre_g);
    Tensor djoint_r = matvec_transposed(p.w_cand, pre_g);

    Tensor dr(cache.r.shape());
    for (std::size_t k = 0; k < h; ++k) {
        dr[k] = djoint_r[k] * cache.h_prev[k];
        dh_prev[k] += djoint_r[k] * cache.r[k];
    }
    Tensor dx = slice1d(djoint_r, h, djoint_r.size());

    Tensor pre_z = sigmoid_grad(cache.z, dz);
    Tensor pre_r = sigmoid_grad(cache.r, dr);
    add_outer(pg.w_update, pre_z, cache.joint);
    add_outer(pg.w_reset, pre_r, cache.joint);
    add_in_place(pg.b_update, pre_z);
    add_in_place(pg.b_reset, pre_r);

    Tensor djoint = matvec_transposed(p.w_update, pre_z);
    add_in_place(djoint, matvec_transposed(p.w_reset, pre_r));
    for (std::size_t k = 0; k < h; ++k) dh_prev[k] += djoint[k];
    for (std::size_t k = h; k < djoint.size(); ++k) dx[k - h] += djoint[k];

    return {std::move(dh_prev), std::move(dx)};
}

// ---- sequence layers ----

namespace {

void check_sequence(const Tensor& xs, std::size_t valid_len, std::size_t input_dim) {
    if (xs.rank() != 2 || xs.dim(1) != input_dim) {
        throw ShapeError("sequence layer: input " + shape_str(xs) + " vs expected width " +
                         std::to_string(input_dim));
    }
    if (xs.dim(0) == 0 || valid_len == 0) {
        throw UsageError("sequence layer: empty input sequence");
    }
    if (valid_len > xs.dim(0)) {
        throw ShapeError("sequence layer: valid length " + std::to_string(valid_len) +
                         " exceeds " + std::to_string(xs.dim(0)) + " rows");
    }
}

}  // namespace

LstmLayer::LstmLayer(std::size_t hidden, std::size_t input, Rng& rng)
    : params(LstmCellParams::init(hidden, input, rng)),
      grads(LstmCellParams::zeros(hidden, input)) {}

Tensor LstmLayer::forward(const Tensor& xs, std::size_t valid_len) {
    check_sequence(xs, valid_len, params.input_dim());
    steps_ = xs.dim(0);
    valid_ = valid_len;
    caches_.assign(valid_, LstmStepCache{});
    Tensor out({steps_, params.hidden()});
    LstmState state = LstmState::zero(params.hidden());
    for (std::size_t t = 0; t < valid_; ++t) {
        state = lstm_step(params, state, matrix_row(xs, t), &caches_[t]);
        set_matrix_row(out, t, state.h);
    }
    return out;
}

Tensor LstmLayer::backward(const Tensor& dh_seq) {
    if (caches_.empty()) throw UsageError("LstmLayer::backward: no cached forward pass");
    if (dh_seq.rank() != 2 || dh_seq.dim(0) != steps_ || dh_seq.dim(1) != params.hidden()) {
        throw ShapeError("LstmLayer::backward: upstream " + shape_str(dh_seq));
    }
    Tensor dxs({steps_, params.input_dim()});
    Tensor dh_next({params.hidden()});
    Tensor dc_next({params.hidden()});
    for (std::size_t ti = valid_; ti-- > 0;) {
        Tensor dh = matrix_row(dh_seq, ti);
        add_in_place(dh, dh_next);
        LstmStepInputGrads g = lstm_step_backward(params, caches_[ti], dh, dc_next, grads);
        set_matrix_row(dxs, ti, g.dx);
        dh_next = std::move(g.dh_prev);
        dc_next = std::move(g.dc_prev);
    }
    return dxs;
}

void LstmLayer::register_params(ParamRegistry& reg, const std::string& prefix) {
    reg.push_back({prefix + ".W_f", &params.w_forget, &grads.w_forget});
    reg.push_back({prefix + ".W_i", &params.w_input, &grads.w_input});
    reg.push_back({prefix + ".W_o", &params.w_output, &grads.w_output});
    reg.push_back({prefix + ".W_c", &params.w_cand, &grads.w_cand});
    reg.push_back({prefix + ".b_f", &params.b_forget, &grads.b_forget});
    reg.push_back({prefix + ".b_i", &params.b_input, &grads.b_input});
    reg.push_back({prefix + ".b_o", &params.b_output, &grads.b_output});
    reg.push_back({prefix + ".b_c", &params.b_cand, &grads.b_cand});
}

GruLayer::GruLayer(std::size_t hidden, std::size_t input, Rng& rng)
    : params(GruCellParams::init(hidden, input, rng)),
      grads(GruCellParams::zeros(hidden, input)) {}

Tensor GruLayer::forward(const Tensor& xs, std::size_t valid_len) {
    check_sequence(xs, valid_len, params.input_dim());
    steps_ = xs.dim(0);
    valid_ = valid_len;
    caches_.assign(valid_, GruStepCache{});
    Tensor out({steps_, params.hidden()});
    Tensor state({params.hidden()});
    for (std::size_t t = 0; t < valid_; ++t) {
        state = gru_step(params, state, matrix_row(xs, t), &caches_[t]);
        set_matrix_row(out, t, state);
    }
    return out;
}

Tensor GruLayer::backward(const Tensor& dh_seq) {
    if (caches_.empty()) throw UsageError("GruLayer::backward: no cached forward pass");
    if (dh_seq.rank() != 2 || dh_seq.dim(0) != steps_ || dh_seq.dim(1) != params.hidden()) {
        throw ShapeError("GruLayer::backward: upstream " + shape_str(dh_seq));
    }
    Tensor dxs({steps_, params.input_dim()});
    Tensor dh_next({params.hidden()});
    for (std::size_t ti = valid_; ti-- > 0;) {
        Tensor dh = matrix_row(dh_seq, ti);
        add_in_place(dh, dh_next);
        GruStepInputGrads g = gru_step_backward(params, caches_[ti], dh, grads);
        set_matrix_row(dxs, ti, g.dx);
        dh_next = std::move(g.dh_prev);
    }
    return dxs;
}

void GruLayer::register_params(ParamRegistry& reg, const std::string& prefix) {
    reg.push_back({prefix + ".W_z", &params.w_update, &grads.w_update});
    reg.push_back({prefix + ".W_r", &params.w_reset, &grads.w_reset});
    reg.push_back({prefix + ".W_h", &params.w_cand, &grads.w_cand});
    reg.push_back({prefix + ".b_z", &params.b_update, &grads.b_update});
    reg.push_back({prefix + ".b_r", &params.b_reset, &grads.b_reset});
    reg.push_back({prefix + ".b_h", &params.b_cand, &grads.b_cand});
}

Tensor reverse_rows(const Tensor& xs, std::size_t valid_len) {
    if (xs.rank() != 2 || valid_len > xs.dim(0)) {
        throw ShapeError("reverse_rows: " + shape_str(xs) + " with valid length " +
                         std::to_string(valid_len));
    }
    Tensor out = xs;
    std::size_t d = xs.dim(1);
    for (std::size_t t = 0; t < valid_len; ++t) {
        for (std::size_t j = 0; j < d; ++j) out.at(t, j) = xs.at(valid_len - 1 - t, j);
    }
    return out;
}

namespace {

template <class Layer, class Params>
Tensor run_bidirectional_impl(const Params& cell, const Tensor& inputs) {
    cell.check_consistent();
    if (inputs.rank() != 2 || inputs.dim(0) == 0) {
        throw UsageError("run_bidirectional: empty input sequence");
    }
    Layer fwd, bwd;
    fwd.params = cell;
    fwd.grads = Params::zeros(cell.hidden(), cell.input_dim());
    bwd.params = cell;
    bwd.grads = Params::zeros(cell.hidden(), cell.input_dim());
    std::size_t t_len = inputs.dim(0);
    Tensor hf = fwd.forward(inputs, t_len);
    Tensor hb = bwd.forward(reverse_rows(inputs, t_len), t_len);
    return concat(hf, reverse_rows(hb, t_len), 1);
}

}  // namespace

Tensor run_bidirectional(const LstmCellParams& cell, const Tensor& inputs) {
    return run_bidirectional_impl<LstmLayer>(cell, inputs);
}

Tensor run_bidirectional(const GruCellParams& cell, const Tensor& inputs) {
    return run_bidirectional_impl<GruLayer>(cell, inputs);
}

// ---- attention ----

Attention::Attention(std::size_t attn_dim, std::size_t state_dim, Rng& rng) {
    params.w_score = init_uniform(rng, {attn_dim, state_dim}, init_scale(state_dim));
    params.v_query = init_uniform(rng, {attn_dim}, init_scale(attn_dim));
    grads.w_score = Tensor({attn_dim, state_dim});
    grads.v_query = Tensor({attn_dim});
}

Tensor Attention::forward(const Tensor& states, std::size_t valid_len) {
    if (states.rank() != 2 || states.dim(1) != params.w_score.dim(1)) {
        throw ShapeError("attention: states " + shape_str(states) + " vs score matrix " +
                         shape_str(params.w_score));
    }
    if (states.dim(0) == 0 || valid_len == 0) throw UsageError("attention: empty state sequence");
    if (valid_len > states.dim(0)) {
        throw ShapeError("attention: valid length exceeds state count");
    }
    t_len_ = states.dim(0);
    valid_ = valid_len;
    states_ = states;
    std::size_t a = params.v_query.size();
    projected_ = Tensor({valid_, a});
    Tensor scores({valid_});
    for (std::size_t t = 0; t < valid_; ++t) {
        Tensor u = tanh(matvec(params.w_score, matrix_row(states, t)));
        scores[t] = dot(params.v_query, u);
        set_matrix_row(projected_, t, u);
    }
    alpha_ = softmax(scores, 0);
    Tensor out({states.dim(1)});
    for (std::size_t t = 0; t < valid_; ++t) {
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += alpha_[t] * states.at(t, j);
    }
    return out;
}

Tensor Attention::backward(const Tensor& dout) {
    if (valid_ == 0) throw UsageError("Attention::backward: no cached forward pass");
    std::size_t s = states_.dim(1);
    if (dout.size() != s) throw ShapeError("Attention::backward: upstream " + shape_str(dout));

    Tensor dstates({t_len_, s});
    Tensor dalpha({valid_});
    for (std::size_t t = 0; t < valid_; ++t) {
        dalpha[t] = dot(dout, matrix_row(states_, t));
        for (std::size_t j = 0; j < s; ++j) dstates.at(t, j) = alpha_[t] * dout[j];
    }
    // softmax jacobian
    double inner = 0.0;
    for (std::size_t t = 0; t < valid_; ++t) inner += alpha_[t] * dalpha[t];
    for (std::size_t t = 0; t < valid_; ++t) {
        double de = alpha_[t] * (dalpha[t] - inner);
        Tensor u = matrix_row(projected_, t);
        add_scaled(grads.v_query, u, de);
        Tensor du = scale(params.v_query, de);
        Tensor dpre = tanh_grad(u, du);
        add_outer(grads.w_score, dpre, matrix_row(states_, t));
        add_to_matrix_row(dstates, t, matvec_transposed(params.w_score, dpre));
    }
    return dstates;
}

void Attention::register_params(ParamRegistry& reg, const std::string& prefix) {
    reg.push_back({prefix + ".W_a", &params.w_score, &grads.w_score});
    reg.push_back({prefix + ".v_a", &params.v_query, &grads.v_query});
}

Tensor attend(const AttentionParams& p, const Tensor& states) {
    Attention a;
    a.params = p;
    a.grads.w_score = Tensor(p.w_score.shape());
    a.grads.v_query = Tensor(p.v_query.shape());
    return a.forward(states, states.rank() == 2 ? states.dim(0) : 0);
}

// ---- text extractors ----

TextModel text_model_from_id(int i) {
    if (i < 1 || i > 4) {
        throw ConfigError("text extractor id must be in {1,2,3,4}, got " + std::to_string(i));
    }
    return static_cast<TextModel>(i);
}

TextExtractor::TextExtractor(TextModel model, const TextChannelConfig& cfg, Rng& rng)
    : model_(model), cfg_(cfg) {
    if (cfg_.attn_dim == 0) cfg_.attn_dim = cfg_.h3;
    switch (model_) {
        case TextModel::BiLstmFinal:
        case TextModel::BiLstmAttention:
            lstm_stack_.emplace_back(cfg_.h12, cfg_.emb_dim, rng);
            lstm_stack_.emplace_back(cfg_.h12, 2 * cfg_.h12, rng);
            lstm_stack_.emplace_back(cfg_.h3, 2 * cfg_.h12, rng);
            break;
        case TextModel::BiGruFinal:
            gru_stack_.emplace_back(cfg_.h12, cfg_.emb_dim, rng);
            gru_stack_.emplace_back(cfg_.h12, 2 * cfg_.h12, rng);
            gru_stack_.emplace_back(cfg_.h3, 2 * cfg_.h12, rng);
            break;
        case TextModel::SentenceDense:
            sentence_dense_ = Dense(cfg_.sent_dim, cfg_.dense_out, Activation::Relu, rng);
            sentence_drop_ = Dropout(cfg_.dropout);
            break;
    }
    if (model_ == TextModel::BiLstmAttention) {
        attn_ = Attention(cfg_.attn_dim, 2 * cfg_.h3, rng);
    }
    if (model_ != TextModel::SentenceDense) {
        drops_.assign(3, Dropout(cfg_.dropout));
    }
}

std::size_t TextExtractor::feature_dim() const {
    return model_ == TextModel::SentenceDense ? cfg_.dense_out : 2 * cfg_.h3;
}

TextFeature TextExtractor::extract(const Tensor& input, std::size_t valid_len, bool training,
                                   Rng& drop_rng) {
    if (model_ == TextModel::SentenceDense) {
        Tensor out = sentence_drop_.forward(sentence_dense_.forward(input), training, drop_rng);
        return {std::move(out), static_cast<int>(model_)};
    }
    valid_ = valid_len;
    t_len_ = input.dim(0);
    Tensor h = input;
    if (!lstm_stack_.empty()) {
        for (std::size_t k = 0; k < lstm_stack_.size(); ++k) {
            h = drops_[k].forward(lstm_stack_[k].forward(h, valid_), training, drop_rng);
        }
    } else {
        for (std::size_t k = 0; k < gru_stack_.size(); ++k) {
            h = drops_[k].forward(gru_stack_[k].forward(h, valid_), training, drop_rng);
        }
    }
    if (model_ == TextModel::BiLstmAttention) {
        return {attn_.forward(h, valid_), static_cast<int>(model_)};
    }
    // final states: forward half at the last valid step, backward half at 0
    std::size_t h3 = cfg_.h3;
    Tensor feat({2 * h3});
    for (std::size_t j = 0; j < h3; ++j) {
        feat[j] = h.at(valid_ - 1, j);
        feat[h3 + j] = h.at(0, h3 + j);
    }
    return {std::move(feat), static_cast<int>(model_)};
}

Tensor TextExtractor::backward(const Tensor& dfeature) {
    if (model_ == TextModel::SentenceDense) {
        return sentence_dense_.backward(sentence_drop_.backward(dfeature));
    }
    Tensor dh;
    if (model_ == TextModel::BiLstmAttention) {
        dh = attn_.backward(dfeature);
    } else {
        std::size_t h3 = cfg_.h3;
        dh = Tensor({t_len_, 2 * h3});
        for (std::size_t j = 0; j < h3; ++j) {
            dh.at(valid_ - 1, j) = dfeature[j];
            dh.at(0, h3 + j) = dfeature[h3 + j];
        }
    }
    if (!lstm_stack_.empty()) {
        for (std::size_t k = lstm_stack_.size(); k-- > 0;) {
            dh = lstm_stack_[k].backward(drops_[k].backward(dh));
        }
    } else {
        for (std::size_t k = gru_stack_.size(); k-- > 0;) {
            dh = gru_stack_[k].backward(drops_[k].backward(dh));
        }
    }
    return dh;
}

void TextExtractor::register_params(ParamRegistry& reg, const std::string& prefix) {
    for (std::size_t k = 0; k < lstm_stack_.size(); ++k) {
        lstm_stack_[k].register_params(reg, prefix + ".lstm" + std::to_string(k + 1));
    }
    for (std::size_t k = 0; k < gru_stack_.size(); ++k) {
        gru_stack_[k].register_params(reg, prefix + ".gru" + std::to_string(k + 1));
    }
    if (model_ == TextModel::BiLstmAttention) attn_.register_params(reg, prefix + ".attn");
    if (model_ == TextModel::SentenceDense) sentence_dense_.register_params(reg, prefix + ".fc");
}

}  // namespace memefuse
