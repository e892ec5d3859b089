#include "memefuse/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "memefuse/error.hpp"

#include "json.hpp"

namespace memefuse {

namespace {

std::string read_file(const std::string& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(std::string(what) + ": cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

std::vector<DatasetRecord> load_dataset(const std::string& path, std::size_t classes,
                                        bool require_labels) {
    return parse_dataset(read_file(path, "dataset"), path, classes, require_labels);
}

std::vector<DatasetRecord> parse_dataset(const std::string& content, const std::string& origin,
                                         std::size_t classes, bool require_labels) {
    std::vector<DatasetRecord> records;
    std::set<std::string> seen;
    std::istringstream in(content);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::string where = origin + ":" + std::to_string(lineno);
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw DataError("dataset: " + where + ": invalid JSON object");
        }
        DatasetRecord rec;
        if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>().empty()) {
            throw DataError("dataset: " + where + ": missing or empty \"id\"");
        }
        rec.id = j["id"].get<std::string>();
        if (!seen.insert(rec.id).second) {
            throw DataError("dataset: " + where + ": duplicate id '" + rec.id + "'");
        }
        if (!j.contains("text") || !j["text"].is_string()) {
            throw DataError("dataset: " + where + ": missing \"text\"");
        }
        rec.text = j["text"].get<std::string>();
        if (!j.contains("image") || !j["image"].is_string()) {
            throw DataError("dataset: " + where + ": missing \"image\"");
        }
        rec.image_ref = j["image"].get<std::string>();
        if (j.contains("label") && !j["label"].is_null()) {
            if (!j["label"].is_number_integer()) {
                throw DataError("dataset: " + where + ": \"label\" must be an integer");
            }
            long v = j["label"].get<long>();
            if (v < 0 || v >= static_cast<long>(classes)) {
                throw DataError("dataset: " + where + ": label " + std::to_string(v) +
                                " out of range [0, " + std::to_string(classes) + ")");
            }
            rec.label = static_cast<int>(v);
        } else if (require_labels) {
            throw DataError("dataset: " + where + ": missing \"label\"");
        }
        records.push_back(std::move(rec));
    }
    return records;
}

Tensor load_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("ppm: cannot open " + path);

    auto next_token = [&in, &path]() {
        std::string tok;
        int c;
        while ((c = in.get()) != EOF) {
            if (c == '#') {  // comment to end of line
                while ((c = in.get()) != EOF && c != '\n') {
                }
                continue;
            }
            if (std::isspace(c)) {
                if (!tok.empty()) break;
                continue;
            }
            tok.push_back(static_cast<char>(c));
        }
        if (tok.empty()) throw DataError("ppm: truncated header in " + path);
        return tok;
    };

    if (next_token() != "P6") throw DataError("ppm: " + path + " is not binary P6");
    std::size_t width, height, maxval;
    try {
        width = std::stoul(next_token());
        height = std::stoul(next_token());
        maxval = std::stoul(next_token());
    } catch (const std::exception&) {
        throw DataError("ppm: bad header in " + path);
    }
    if (width == 0 || height == 0) throw DataError("ppm: zero dimensions in " + path);
    if (maxval == 0 || maxval > 255) {
        throw DataError("ppm: " + path + ": only 8-bit maxval supported, got " +
                        std::to_string(maxval));
    }
    std::vector<char> bytes(width * height * 3);
    in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
        throw DataError("ppm: truncated pixel data in " + path);
    }
    Tensor image({height, width, 3});
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        double v = static_cast<unsigned char>(bytes[i]) / static_cast<double>(maxval);
        image[i] = std::clamp(v, 0.0, 1.0);
    }
    return image;
}

void save_ppm(const std::string& path, const Tensor& image) {
    if (image.rank() != 3 || image.dim(2) != 3) {
        throw ShapeError("ppm: expected H x W x 3 image, got " + shape_str(image));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("ppm: cannot write " + path);
    out << "P6\n" << image.dim(1) << ' ' << image.dim(0) << "\n255\n";
    for (std::size_t i = 0; i < image.size(); ++i) {
        double v = std::clamp(image[i], 0.0, 1.0);
        out.put(static_cast<char>(std::lround(v * 255.0)));
    }
}

Tensor resize_nearest(const Tensor& image, std::size_t size) {
    if (image.rank() != 3) throw ShapeError("resize: expected rank-3 image");
    std::size_t h = image.dim(0), w = image.dim(1), c = image.dim(2);
    if (h == size && w == size) return image;
    Tensor out({size, size, c});
    for (std::size_t y = 0; y < size; ++y) {
        std::size_t sy = std::min(h - 1, y * h / size);
        for (std::size_t x = 0; x < size; ++x) {
            std::size_t sx = std::min(w - 1, x * w / size);
            for (std::size_t ch = 0; ch < c; ++ch) out.at(y, x, ch) = image.at(sy, sx, ch);
        }
    }
    return out;
}

}  // namespace memefuse
