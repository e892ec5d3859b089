#include "memefuse/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "memefuse/error.hpp"

namespace memefuse {

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    std::size_t lo = s.find_first_not_of(" \t");
    if (lo == std::string::npos) return "";
    std::size_t hi = s.find_last_not_of(" \t");
    return s.substr(lo, hi - lo + 1);
}

std::size_t parse_size(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        long long v = std::stoll(value, &used);
        if (used != value.size() || v < 0) throw std::invalid_argument(value);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw ConfigError("config: " + key + ": expected a nonnegative integer, got '" + value +
                          "'");
    }
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: " + key + ": expected a number, got '" + value + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        unsigned long long v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
        throw ConfigError("config: " + key + ": expected an unsigned integer, got '" + value +
                          "'");
    }
}

std::vector<std::pair<int, int>> parse_members(const std::string& value) {
    std::vector<std::pair<int, int>> members;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        std::size_t colon = item.find(':');
        if (colon == std::string::npos) {
            throw ConfigError("config: ensemble.members: expected i:j pairs, got '" + item + "'");
        }
        int i = static_cast<int>(parse_size("ensemble.members", trim(item.substr(0, colon))));
        int j = static_cast<int>(parse_size("ensemble.members", trim(item.substr(colon + 1))));
        if (i < 1 || i > 4 || j < 1 || j > 2) {
            throw ConfigError("config: ensemble.members: pair " + item + " out of range");
        }
        std::pair<int, int> p{i, j};
        if (std::find(members.begin(), members.end(), p) != members.end()) {
            throw ConfigError("config: ensemble.members: duplicate pair " + item);
        }
        members.push_back(p);
    }
    if (members.empty()) throw ConfigError("config: ensemble.members: empty member list");
    return members;
}

std::string members_to_string(const std::vector<std::pair<int, int>>& members) {
    std::string out;
    for (std::size_t k = 0; k < members.size(); ++k) {
        if (k) out += ',';
        out += std::to_string(members[k].first) + ":" + std::to_string(members[k].second);
    }
    return out;
}

std::vector<double> parse_weights(const std::string& value) {
    std::vector<double> weights;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        weights.push_back(parse_double("train.class_weights", item));
    }
    return weights;
}

std::string weights_to_string(const std::vector<double>& weights) {
    std::string out;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (k) out += ',';
        out += fmt_double(weights[k]);
    }
    return out;
}

}  // namespace

PipelineConfig::PipelineConfig() {
    for (int i = 1; i <= 4; ++i) {
        for (int j = 1; j <= 2; ++j) members.emplace_back(i, j);
    }
}

PipelineConfig PipelineConfig::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path);
}

PipelineConfig PipelineConfig::parse(const std::string& content, const std::string& origin) {
    PipelineConfig cfg;
    std::istringstream in(content);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: " + origin + ":" + std::to_string(lineno) +
                              ": expected key=value");
        }
        cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    cfg.validate();
    return cfg;
}

void PipelineConfig::set(const std::string& key, const std::string& value) {
    if (key == "text.h12") {
        text_h12 = parse_size(key, value);
    } else if (key == "text.h3") {
        text_h3 = parse_size(key, value);
    } else if (key == "text.dropout") {
        text_dropout = parse_double(key, value);
        train.dropout = text_dropout;
    } else if (key == "fusion.d") {
        fusion_d = parse_size(key, value);
    } else if (key == "image.c") {
        image_c = parse_size(key, value);
    } else if (key == "image.m") {
        image_m = parse_size(key, value);
    } else if (key == "image.l") {
        image_l = parse_size(key, value);
    } else if (key == "image.p") {
        image_p = parse_double(key, value);
    } else if (key == "image.size") {
        image_size = parse_size(key, value);
    } else if (key == "image.proj") {
        image_proj = parse_size(key, value);
    } else if (key == "model.classes") {
        classes = parse_size(key, value);
    } else if (key == "ensemble.members") {
        members = parse_members(value);
    } else if (key == "train.batch") {
        train.batch_size = parse_size(key, value);
    } else if (key == "train.epochs") {
        train.epochs = parse_size(key, value);
    } else if (key == "train.lr") {
        train.learning_rate = parse_double(key, value);
    } else if (key == "train.seed") {
        train.seed = parse_u64(key, value);
    } else if (key == "train.optimizer") {
        train.optimizer = optimizer_from_name(value);
    } else if (key == "train.dev_fraction") {
        train.dev_fraction = parse_double(key, value);
    } else if (key == "train.class_weights") {
        train.class_weights = parse_weights(value);
    } else if (key == "train.stop_train_f1") {
        train.stop_train_f1 = parse_double(key, value);
    } else if (key == "data.emb_dim") {
        emb_dim = parse_size(key, value);
    } else if (key == "data.sent_dim") {
        sent_dim = parse_size(key, value);
    } else if (key == "data.image_vec_dim") {
        image_vec_dim = parse_size(key, value);
    } else if (key == "model.init") {
        // informational; fixed scheme
    } else {
        throw ConfigError("config: unknown key '" + key + "'");
    }
}

void PipelineConfig::apply_grid_value(const std::string& name, double value) {
    auto as_size = [&](const char* what) {
        if (value < 0.0 || value != std::floor(value)) {
            throw ConfigError(std::string("grid: ") + what + " needs a nonnegative integer, got " +
                              fmt_double(value));
        }
        return static_cast<std::size_t>(value);
    };
    if (name == "h12") {
        text_h12 = as_size("h12");
    } else if (name == "h3") {
        text_h3 = as_size("h3");
    } else if (name == "r") {
        text_dropout = value;
        train.dropout = value;
    } else if (name == "d") {
        fusion_d = as_size("d");
    } else if (name == "c") {
        image_c = as_size("c");
    } else if (name == "m") {
        image_m = as_size("m");
    } else if (name == "l") {
        image_l = as_size("l");
    } else if (name == "p") {
        image_p = value;
    } else {
        throw ConfigError("grid: unknown parameter '" + name + "'");
    }
}

void PipelineConfig::validate() const {
    train.validate();
    if (classes < 2) throw ConfigError("config: model.classes must be >= 2");
    if (text_h12 < 1 || text_h3 < 1) throw ConfigError("config: text hidden sizes must be >= 1");
    if (!(text_dropout >= 0.0 && text_dropout < 1.0)) {
        throw ConfigError("config: text.dropout must be in [0, 1)");
    }
    if (image_c < 1) throw ConfigError("config: image.c must be >= 1");
    if (image_m < 1) throw ConfigError("config: image.m must be >= 1");
    if (image_l < 1 || image_l % 2 == 0) throw ConfigError("config: image.l must be odd");
    if (!(image_p >= 0.0 && image_p < 1.0)) throw ConfigError("config: image.p must be in [0, 1)");
    if (image_size < image_l) throw ConfigError("config: image.size smaller than image.l");
    if (image_proj < 1) throw ConfigError("config: image.proj must be >= 1");
    if (members.empty()) throw ConfigError("config: ensemble.members must not be empty");
    if (!train.class_weights.empty() && train.class_weights.size() != classes) {
        throw ConfigError("config: train.class_weights needs exactly model.classes entries");
    }
}

std::map<std::string, std::string> PipelineConfig::snapshot() const {
    std::map<std::string, std::string> snap;
    snap["text.h12"] = std::to_string(text_h12);
    snap["text.h3"] = std::to_string(text_h3);
    snap["text.dropout"] = fmt_double(text_dropout);
    snap["fusion.d"] = std::to_string(fusion_d);
    snap["image.c"] = std::to_string(image_c);
    snap["image.m"] = std::to_string(image_m);
    snap["image.l"] = std::to_string(image_l);
    snap["image.p"] = fmt_double(image_p);
    snap["image.size"] = std::to_string(image_size);
    snap["image.proj"] = std::to_string(image_proj);
    snap["model.classes"] = std::to_string(classes);
    snap["ensemble.members"] = members_to_string(members);
    snap["train.batch"] = std::to_string(train.batch_size);
    snap["train.epochs"] = std::to_string(train.epochs);
    snap["train.lr"] = fmt_double(train.learning_rate);
    snap["train.seed"] = std::to_string(train.seed);
    snap["train.optimizer"] = optimizer_name(train.optimizer);
    snap["train.dev_fraction"] = fmt_double(train.dev_fraction);
    if (!train.class_weights.empty()) {
        snap["train.class_weights"] = weights_to_string(train.class_weights);
    }
    if (train.stop_train_f1 > 0.0) {
        snap["train.stop_train_f1"] = fmt_double(train.stop_train_f1);
    }
    snap["data.emb_dim"] = std::to_string(emb_dim);
    snap["data.sent_dim"] = std::to_string(sent_dim);
    snap["data.image_vec_dim"] = std::to_string(image_vec_dim);
    snap["model.init"] = "uniform(1/sqrt(fan_in))";
    return snap;
}

PipelineConfig PipelineConfig::from_snapshot(const std::map<std::string, std::string>& snap) {
    PipelineConfig cfg;
    for (const auto& [key, value] : snap) cfg.set(key, value);
    cfg.validate();
    return cfg;
}

TextChannelConfig PipelineConfig::text_channel_config() const {
    TextChannelConfig c;
    c.h12 = text_h12;
    c.h3 = text_h3;
    c.attn_dim = 0;  // defaults to h3
    c.dropout = text_dropout;
    c.emb_dim = emb_dim;
    c.sent_dim = sent_dim;
    c.dense_out = fusion_d > 0 ? fusion_d : 128;
    return c;
}

ImageChannelConfig PipelineConfig::image_channel_config() const {
    ImageChannelConfig c;
    c.conv_layers = image_c;
    c.filters = image_m;
    c.kernel = image_l;
    c.dropout = image_p;
    c.input_size = image_size;
    c.channels = 3;
    c.proj_dim = image_proj;
    return c;
}

std::vector<MemberSpec> PipelineConfig::member_specs() const {
    std::vector<MemberSpec> specs;
    for (auto [i, j] : members) {
        MemberSpec spec;
        spec.text_extractor = i;
        spec.image_extractor = j;
        spec.dense_size = fusion_d;
        spec.class_count = classes;
        specs.push_back(spec);
    }
    return specs;
}

bool PipelineConfig::needs_tokens() const {
    return std::any_of(members.begin(), members.end(),
                       [](const auto& m) { return m.first != 4; });
}

bool PipelineConfig::needs_sentences() const {
    return std::any_of(members.begin(), members.end(),
                       [](const auto& m) { return m.first == 4; });
}

bool PipelineConfig::needs_images() const {
    return std::any_of(members.begin(), members.end(),
                       [](const auto& m) { return m.second == 1; });
}

bool PipelineConfig::needs_image_vectors() const {
    return std::any_of(members.begin(), members.end(),
                       [](const auto& m) { return m.second == 2; });
}

}  // namespace memefuse
