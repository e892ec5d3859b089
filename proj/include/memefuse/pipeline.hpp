#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "memefuse/bundle.hpp"
#include "memefuse/config.hpp"
#include "memefuse/dataset.hpp"
#include "memefuse/embedding.hpp"
#include "memefuse/model.hpp"
#include "memefuse/preprocess.hpp"
#include "memefuse/trainer.hpp"

namespace memefuse {

struct DataPaths {
    std::string dataset;
    std::string embeddings;        // word vectors; required by text extractors 1-3
    std::string sentence_vectors;  // required by text extractor 4
    std::string image_features;    // required by image extractor 2
    std::string lexicon;           // empty -> built-in netspeak list
};

using ProgressFn = std::function<void(const std::string&)>;

// Everything one command needs in memory: config, side files, featurized
// records, and the ensemble members.
class Pipeline {
public:
    // Loads the files the configured members need, featurizes the dataset
    // (labels required), and builds freshly initialized members.
    static Pipeline for_training(PipelineConfig cfg, const DataPaths& paths,
                                 const ProgressFn& progress = {});

    // Rebuilds members from a bundle's config snapshot and parameters, then
    // featurizes the given dataset with the bundle's expected dimensions.
    static Pipeline from_bundle(const ModelBundle& bundle, const DataPaths& paths,
                                bool require_labels, const ProgressFn& progress = {});

    const PipelineConfig& config() const { return cfg_; }
    const std::vector<DatasetRecord>& records() const { return records_; }
    const std::vector<SampleFeatures>& features() const { return features_; }
    std::vector<std::unique_ptr<EnsembleMember>>& members() { return members_; }
    const ReplacementLexicon& lexicon() const { return lexicon_; }

    // Seeded split of the featurized dataset, then epoch-interleaved
    // training of every member.
    EnsembleTrainResult train(const ProgressFn& progress = {});

    // Rebuilds members from scratch (used between grid-search cells).
    void rebuild_members();

    // Swaps in a new configuration (observed data dims must match) and
    // rebuilds the members.
    void set_config(PipelineConfig cfg);

    Prediction predict_record(std::size_t index);
    std::vector<Prediction> predict_all();
    MetricsReport evaluate();

    ModelBundle to_bundle();

private:
    Pipeline() = default;
    void load_side_files(const DataPaths& paths, const ProgressFn& progress);
    void featurize(const DataPaths& paths, bool require_labels, const ProgressFn& progress);
    void apply_bundle_params(const ModelBundle& bundle);

    PipelineConfig cfg_;
    ReplacementLexicon lexicon_;
    std::optional<EmbeddingTable> embeddings_;
    std::optional<VectorStore> sentences_;
    std::optional<VectorStore> image_vectors_;
    std::vector<DatasetRecord> records_;
    std::vector<SampleFeatures> features_;
    std::vector<std::unique_ptr<EnsembleMember>> members_;
};

}  // namespace memefuse
