#pragma once

#include <memory>
#include <string>
#include <vector>

#include "memefuse/layers.hpp"
#include "memefuse/tensor.hpp"

namespace memefuse {

// ---- LSTM memory block ----

struct LstmCellParams {
    Tensor w_forget, w_input, w_output, w_cand;  // h x (h + d_in)
    Tensor b_forget, b_input, b_output, b_cand;  // h

    static LstmCellParams init(std::size_t hidden, std::size_t input, Rng& rng);
    static LstmCellParams zeros(std::size_t hidden, std::size_t input);

    std::size_t hidden() const { return b_forget.size(); }
    std::size_t input_dim() const { return w_forget.dim(1) - hidden(); }
    void check_consistent() const;
};

struct LstmState {
    Tensor h, c;
    static LstmState zero(std::size_t hidden) { return {Tensor({hidden}), Tensor({hidden})}; }
};

struct LstmStepCache {
    Tensor joint;         // [h_prev, x]
    Tensor f, i, o, g;    // gate activations and candidate
    Tensor c_prev, c, tanh_c;
};

// One memory-block update: gates over [h_prev, x], candidate, state update.
LstmState lstm_step(const LstmCellParams& p, const LstmState& prev, const Tensor& x,
                    LstmStepCache* cache = nullptr);

struct LstmStepInputGrads {
    Tensor dh_prev, dc_prev, dx;
};

// Accumulates parameter gradients into `pg`; returns gradients w.r.t. the
// step inputs. `dh`/`dc` are the upstream gradients for h_t and C_t.
LstmStepInputGrads lstm_step_backward(const LstmCellParams& p, const LstmStepCache& cache,
                                      const Tensor& dh, const Tensor& dc, LstmCellParams& pg);

// ---- GRU ----

struct GruCellParams {
    Tensor w_update, w_reset, w_cand;  // h x (h + d_in)
    Tensor b_update, b_reset, b_cand;  // h

    static GruCellParams init(std::size_t hidden, std::size_t input, Rng& rng);
    static GruCellParams zeros(std::size_t hidden, std::size_t input);

    std::size_t hidden() const { return b_update.size(); }
    std::size_t input_dim() const { return w_update.dim(1) - hidden(); }
    void check_consistent() const;
};

struct GruStepCache {
    Tensor h_prev;
    Tensor joint;    // [h_prev, x]
    Tensor z, r;     // update and reset gates
    Tensor joint_r;  // [r * h_prev, x]
    Tensor g;        // candidate
};

// z = sig(Wz[h,x]+bz); r = sig(Wr[h,x]+br); g = tanh(Wh[r*h, x]+bh);
// h_t = (1-z)*h_prev + z*g.
Tensor gru_step(const GruCellParams& p, const Tensor& h_prev, const Tensor& x,
                GruStepCache* cache = nullptr);

struct GruStepInputGrads {
    Tensor dh_prev, dx;
};

GruStepInputGrads gru_step_backward(const GruCellParams& p, const GruStepCache& cache,
                                    const Tensor& dh, GruCellParams& pg);

// ---- sequence layers ----

// Unidirectional LSTM over a T x d_in sequence; zero initial state. Rows at
// t >= valid_len are masked: they produce zero output and receive no
// gradient.
class LstmLayer {
public:
    LstmLayer() = default;
    LstmLayer(std::size_t hidden, std::size_t input, Rng& rng);

    Tensor forward(const Tensor& xs, std::size_t valid_len);
    Tensor backward(const Tensor& dh_seq);
    void register_params(ParamRegistry& reg, const std::string& prefix);
    std::size_t hidden() const { return params.hidden(); }

    LstmCellParams params, grads;

private:
    std::vector<LstmStepCache> caches_;
    std::size_t steps_ = 0, valid_ = 0;
};

class GruLayer {
public:
    GruLayer() = default;
    GruLayer(std::size_t hidden, std::size_t input, Rng& rng);

    Tensor forward(const Tensor& xs, std::size_t valid_len);
    Tensor backward(const Tensor& dh_seq);
    void register_params(ParamRegistry& reg, const std::string& prefix);
    std::size_t hidden() const { return params.hidden(); }

    GruCellParams params, grads;

private:
    std::vector<GruStepCache> caches_;
    std::size_t steps_ = 0, valid_ = 0;
};

// Reverses the first valid_len rows of a T x d matrix, leaving any padded
// tail in place.
Tensor reverse_rows(const Tensor& xs, std::size_t valid_len);

// Forward and backward passes over the same sequence with per-direction
// parameters; output row t is [forward state at t, backward state at t].
template <class Layer>
class Bidirectional {
public:
    Bidirectional() = default;
    Bidirectional(std::size_t hidden, std::size_t input, Rng& rng)
        : fwd_(hidden, input, rng), bwd_(hidden, input, rng) {}

    Tensor forward(const Tensor& xs, std::size_t valid_len) {
        valid_ = valid_len;
        Tensor hf = fwd_.forward(xs, valid_len);
        Tensor hb = bwd_.forward(reverse_rows(xs, valid_len), valid_len);
        return concat(hf, reverse_rows(hb, valid_len), 1);
    }

    Tensor backward(const Tensor& dh_seq) {
        std::size_t h = fwd_.hidden();
        std::size_t t_len = dh_seq.dim(0);
        Tensor df({t_len, h}), db({t_len, h});
        for (std::size_t t = 0; t < t_len; ++t) {
            for (std::size_t j = 0; j < h; ++j) {
                df.at(t, j) = dh_seq.at(t, j);
                db.at(t, j) = dh_seq.at(t, h + j);
            }
        }
        Tensor dx = fwd_.backward(df);
        Tensor dxr = bwd_.backward(reverse_rows(db, valid_));
        add_in_place(dx, reverse_rows(dxr, valid_));
        return dx;
    }

    void register_params(ParamRegistry& reg, const std::string& prefix) {
        fwd_.register_params(reg, prefix + ".fwd");
        bwd_.register_params(reg, prefix + ".bwd");
    }

    std::size_t hidden() const { return fwd_.hidden(); }
    Layer& forward_layer() { return fwd_; }
    Layer& backward_layer() { return bwd_; }

private:
    Layer fwd_, bwd_;
    std::size_t valid_ = 0;
};

using BiLstm = Bidirectional<LstmLayer>;
using BiGru = Bidirectional<GruLayer>;

// Single shared cell run in both directions (the operation form); the
// extractor stack below uses per-direction parameters.
Tensor run_bidirectional(const LstmCellParams& cell, const Tensor& inputs);
Tensor run_bidirectional(const GruCellParams& cell, const Tensor& inputs);

// ---- additive attention ----

struct AttentionParams {
    Tensor w_score;  // a x s
    Tensor v_query;  // a
};

// Scores each encoder state with v' tanh(W state), softmax-normalizes and
// returns the weighted sum of states.
class Attention {
public:
    Attention() = default;
    Attention(std::size_t attn_dim, std::size_t state_dim, Rng& rng);

    Tensor forward(const Tensor& states, std::size_t valid_len);
    Tensor backward(const Tensor& dout);
    void register_params(ParamRegistry& reg, const std::string& prefix);

    const Tensor& weights() const { return alpha_; }  // last forward's alpha

    AttentionParams params, grads;

private:
    Tensor states_, projected_;  // caches: valid states, tanh projections
    Tensor alpha_;
    std::size_t t_len_ = 0, valid_ = 0;
};

// Stateless form over the full sequence.
Tensor attend(const AttentionParams& p, const Tensor& states);

// ---- the four text feature extractors ----

enum class TextModel : int {
    BiLstmFinal = 1,    // stacked BiLSTM, final fwd/bwd states
    BiGruFinal = 2,     // stacked BiGRU, final fwd/bwd states
    BiLstmAttention = 3,// stacked BiLSTM, attention-pooled states
    SentenceDense = 4,  // dense(ReLU) over the sentence-level vector
};

struct TextFeature {
    Tensor vector;
    int extractor_id;
};

struct TextChannelConfig {
    std::size_t h12 = 300;      // hidden size of stacked layers 1-2
    std::size_t h3 = 160;       // hidden size of layer 3 (the feature layer)
    std::size_t attn_dim = 0;   // 0 -> h3
    double dropout = 0.4;
    std::size_t emb_dim = 768;  // word-vector input width (models 1-3)
    std::size_t sent_dim = 768; // sentence-vector width (model 4)
    std::size_t dense_out = 128;// model 4 output width (= fusion dense size)
};

// One of the four text channels f_i. Models 1-3 consume a (possibly padded)
// T x emb_dim token tensor plus its valid length; model 4 consumes the
// sentence vector (valid_len ignored).
class TextExtractor {
public:
    TextExtractor(TextModel model, const TextChannelConfig& cfg, Rng& rng);

    TextFeature extract(const Tensor& input, std::size_t valid_len, bool training, Rng& drop_rng);
    // Gradient w.r.t. the extractor input (token rows or sentence vector).
    Tensor backward(const Tensor& dfeature);

    void register_params(ParamRegistry& reg, const std::string& prefix);
    std::size_t feature_dim() const;
    TextModel model() const { return model_; }

private:
    TextModel model_;
    TextChannelConfig cfg_;
    std::vector<BiLstm> lstm_stack_;
    std::vector<BiGru> gru_stack_;
    std::vector<Dropout> drops_;
    Attention attn_;
    Dense sentence_dense_;
    Dropout sentence_drop_;
    std::size_t valid_ = 0, t_len_ = 0;
};

TextModel text_model_from_id(int i);  // 1..4, else ConfigError

}  // namespace memefuse
