#include "memefuse/pipeline.hpp"

#include <algorithm>
#include <filesystem>

#include "memefuse/error.hpp"

namespace memefuse {

namespace {

constexpr std::uint64_t kSplitStream = 3;

std::string resolve_image_path(const std::string& dataset_path, const std::string& image_ref) {
    std::filesystem::path p(image_ref);
    if (p.is_absolute()) return image_ref;
    return (std::filesystem::path(dataset_path).parent_path() / p).string();
}

}  // namespace

void Pipeline::load_side_files(const DataPaths& paths, const ProgressFn& progress) {
    lexicon_ = paths.lexicon.empty() ? ReplacementLexicon::builtin()
                                     : ReplacementLexicon::load(paths.lexicon);
    if (cfg_.needs_tokens()) {
        if (paths.embeddings.empty()) {
            throw ConfigError("text extractors 1-3 are configured but no --embeddings given");
        }
        embeddings_ = EmbeddingTable::load(paths.embeddings);
        if (progress) {
            progress("loaded " + std::to_string(embeddings_->vocab_size()) +
                     " word vectors of dim " + std::to_string(embeddings_->dim()));
        }
        if (cfg_.emb_dim != 0 && cfg_.emb_dim != embeddings_->dim()) {
            throw ConfigError("embedding dim " + std::to_string(embeddings_->dim()) +
                              " does not match the model's expected " +
                              std::to_string(cfg_.emb_dim));
        }
        cfg_.emb_dim = embeddings_->dim();
    }
    if (cfg_.needs_sentences()) {
        if (paths.sentence_vectors.empty()) {
            throw ConfigError("text extractor 4 is configured but no --sentence-vectors given");
        }
        sentences_ = VectorStore::load(paths.sentence_vectors);
        if (cfg_.sent_dim != 0 && cfg_.sent_dim != sentences_->dim()) {
            throw ConfigError("sentence vector dim " + std::to_string(sentences_->dim()) +
                              " does not match the model's expected " +
                              std::to_string(cfg_.sent_dim));
        }
        cfg_.sent_dim = sentences_->dim();
    }
    if (cfg_.needs_image_vectors()) {
        if (paths.image_features.empty()) {
            throw ConfigError("image extractor 2 is configured but no --image-features given");
        }
        image_vectors_ = VectorStore::load(paths.image_features);
        if (cfg_.image_vec_dim != 0 && cfg_.image_vec_dim != image_vectors_->dim()) {
            throw ConfigError("image feature dim " + std::to_string(image_vectors_->dim()) +
                              " does not match the model's expected " +
                              std::to_string(cfg_.image_vec_dim));
        }
        cfg_.image_vec_dim = image_vectors_->dim();
    }
}

void Pipeline::featurize(const DataPaths& paths, bool require_labels,
                         const ProgressFn& progress) {
    records_ = load_dataset(paths.dataset, cfg_.classes, require_labels);
    if (records_.empty()) throw DataError("dataset: " + paths.dataset + " has no records");
    if (progress) progress("loaded " + std::to_string(records_.size()) + " records");

    features_.resize(records_.size());
    std::vector<std::vector<std::string>> token_lists(records_.size());
    std::size_t max_len = 1;
    if (cfg_.needs_tokens()) {
        for (std::size_t i = 0; i < records_.size(); ++i) {
            token_lists[i] = preprocess(records_[i].text, lexicon_);
            // captions that clean away entirely become a single <unk>
            if (token_lists[i].empty()) token_lists[i].push_back(kUnkToken);
            max_len = std::max(max_len, token_lists[i].size());
        }
    }
    for (std::size_t i = 0; i < records_.size(); ++i) {
        SampleFeatures& f = features_[i];
        const DatasetRecord& rec = records_[i];
        f.label = rec.label.value_or(-1);
        if (cfg_.needs_tokens()) {
            Tensor rows = embeddings_->lookup(token_lists[i]);
            f.valid_len = rows.dim(0);
            if (rows.dim(0) < max_len) {  // pad right with zero vectors
                Tensor padded({max_len, embeddings_->dim()});
                for (std::size_t t = 0; t < rows.dim(0); ++t) {
                    for (std::size_t j = 0; j < rows.dim(1); ++j) {
                        padded.at(t, j) = rows.at(t, j);
                    }
                }
                f.tokens = std::move(padded);
            } else {
                f.tokens = std::move(rows);
            }
        }
        if (cfg_.needs_sentences()) {
            f.sentence = sentences_->get(rec.id);
        }
        if (cfg_.needs_images()) {
            Tensor img = load_ppm(resolve_image_path(paths.dataset, rec.image_ref));
            f.image = resize_nearest(img, cfg_.image_size);
        }
        if (cfg_.needs_image_vectors()) {
            f.image_vec = image_vectors_->get(rec.image_ref);
        }
    }
}

Pipeline Pipeline::for_training(PipelineConfig cfg, const DataPaths& paths,
                                const ProgressFn& progress) {
    cfg.validate();
    Pipeline p;
    p.cfg_ = std::move(cfg);
    p.load_side_files(paths, progress);
    p.featurize(paths, /*require_labels=*/true, progress);
    p.rebuild_members();
    return p;
}

Pipeline Pipeline::from_bundle(const ModelBundle& bundle, const DataPaths& paths,
                               bool require_labels, const ProgressFn& progress) {
    Pipeline p;
    p.cfg_ = PipelineConfig::from_snapshot(bundle.config);
    p.load_side_files(paths, progress);
    if (p.lexicon_.hash() != bundle.lexicon_hash && progress) {
        progress("warning: lexicon differs from the one used at training time");
    }
    p.featurize(paths, require_labels, progress);
    p.rebuild_members();
    p.apply_bundle_params(bundle);
    return p;
}

void Pipeline::rebuild_members() {
    members_ = build_members(cfg_.member_specs(), cfg_.text_channel_config(),
                             cfg_.image_channel_config(), cfg_.image_vec_dim, cfg_.train.seed);
}

void Pipeline::set_config(PipelineConfig cfg) {
    if (cfg.emb_dim != cfg_.emb_dim || cfg.sent_dim != cfg_.sent_dim ||
        cfg.image_vec_dim != cfg_.image_vec_dim || cfg.image_size != cfg_.image_size ||
        cfg.members != cfg_.members || cfg.classes != cfg_.classes) {
        throw UsageError("set_config: the new configuration changes the featurized data");
    }
    cfg_ = std::move(cfg);
    rebuild_members();
}

void Pipeline::apply_bundle_params(const ModelBundle& bundle) {
    for (auto& member : members_) {
        for (ParamRef& p : member->params()) {
            const Tensor* stored = bundle.find(p.name);
            if (!stored) throw DataError("bundle: missing tensor " + p.name);
            if (stored->shape() != p.value->shape()) {
                throw ConfigError("bundle: tensor " + p.name + " has shape " +
                                  shape_str(*stored) + ", model expects " + shape_str(*p.value));
            }
            *p.value = *stored;
        }
    }
}

EnsembleTrainResult Pipeline::train(const ProgressFn& progress) {
    std::vector<std::size_t> index(features_.size());
    for (std::size_t i = 0; i < index.size(); ++i) index[i] = i;
    auto [train_idx, dev_idx] = split_train_dev(index, cfg_.train.dev_fraction,
                                                derive_seed(cfg_.train.seed, kSplitStream));
    std::vector<SampleFeatures> train_set, dev_set;
    for (std::size_t i : train_idx) train_set.push_back(features_[i]);
    for (std::size_t i : dev_idx) dev_set.push_back(features_[i]);
    if (progress) {
        progress("split: " + std::to_string(train_set.size()) + " train / " +
                 std::to_string(dev_set.size()) + " dev");
    }
    return train_ensemble(members_, train_set, dev_set, cfg_.train, progress);
}

Prediction Pipeline::predict_record(std::size_t index) {
    std::vector<Prediction> preds;
    preds.reserve(members_.size());
    for (auto& m : members_) preds.push_back(m->forward(features_[index], false));
    return soft_vote(preds);
}

std::vector<Prediction> Pipeline::predict_all() {
    std::vector<Prediction> out;
    out.reserve(features_.size());
    for (std::size_t i = 0; i < features_.size(); ++i) out.push_back(predict_record(i));
    return out;
}

MetricsReport Pipeline::evaluate() {
    std::vector<std::size_t> y_true, y_pred;
    for (std::size_t i = 0; i < features_.size(); ++i) {
        if (features_[i].label < 0) {
            throw DataError("eval: record " + records_[i].id + " has no label");
        }
        y_true.push_back(static_cast<std::size_t>(features_[i].label));
        y_pred.push_back(predict_label(predict_record(i)));
    }
    return macro_f1(confusion(y_true, y_pred, cfg_.classes));
}

ModelBundle Pipeline::to_bundle() {
    ModelBundle bundle;
    bundle.config = cfg_.snapshot();
    bundle.lexicon_hash = lexicon_.hash();
    bundle.embedding_dim = static_cast<std::uint32_t>(cfg_.emb_dim);
    for (auto& member : members_) {
        for (const ParamRef& p : member->params()) {
            bundle.tensors.emplace_back(p.name, *p.value);
        }
    }
    return bundle;
}

}  // namespace memefuse
