#pragma once

#include <sstream>
#include <string>

#include <json.hpp>

#include "morpheng.hpp"

namespace factseq::serialize {

using morpheng::Coding;
using morpheng::UniformMorphism;
using u32 = morpheng::u32;

// A morphism together with the coding and start letter that generate a coded sequence.
struct MorphismDoc {
    UniformMorphism morphism;
    Coding coding;
    u32 start = 0;
};

inline nlohmann::json to_json(const MorphismDoc& doc) {
    const auto& m = doc.morphism;
    nlohmann::json j;
    j["arity"] = m.L;
    nlohmann::json letters = nlohmann::json::array();
    for (u32 a = 0; a < m.d; ++a) letters.push_back(m.label(a));
    j["letters"] = std::move(letters);
    nlohmann::json images = nlohmann::json::array();
    for (u32 a = 0; a < m.d; ++a) {
        nlohmann::json row = nlohmann::json::array();
        for (u32 pos = 0; pos < m.L; ++pos) row.push_back(m.image(a)[pos]);
        images.push_back(std::move(row));
    }
    j["images"] = std::move(images);
    j["coding"] = doc.coding.values;
    j["start"] = doc.start;
    return j;
}

inline MorphismDoc from_json(const nlohmann::json& j) {
    u32 L = j.at("arity").get<u32>();
    auto letters = j.at("letters").get<std::vector<std::string>>();
    u32 d = (u32)letters.size();
    std::vector<u32> images;
    images.reserve((std::size_t)d * L);
    const auto& rows = j.at("images");
    if (rows.size() != d) throw std::domain_error("morphism json: image row count != letters");
    for (const auto& row : rows) {
        if (row.size() != L) throw std::domain_error("morphism json: image row length != arity");
        for (const auto& x : row) images.push_back(x.get<u32>());
    }
    MorphismDoc doc;
    doc.morphism = morpheng::make_morphism(d, L, std::move(images), std::move(letters));
    doc.coding.values = j.at("coding").get<std::vector<morpheng::i64>>();
    if (doc.coding.values.size() != d) throw std::domain_error("morphism json: coding size != letters");
    doc.start = j.at("start").get<u32>();
    if (doc.start >= d) throw std::domain_error("morphism json: start letter out of range");
    return doc;
}

inline bool same_doc(const MorphismDoc& a, const MorphismDoc& b) {
    return a.morphism.d == b.morphism.d && a.morphism.L == b.morphism.L &&
           a.morphism.images == b.morphism.images && a.coding.values == b.coding.values &&
           a.start == b.start;
}

// Graphviz digraph: one node per letter (label + coded value), edges grouped per
// (source, target) pair and annotated with the image positions where the target occurs.
inline std::string to_dot(const MorphismDoc& doc, const std::string& name = "morphism") {
    const auto& m = doc.morphism;
    std::ostringstream os;
    os << "digraph " << name << " {\n";
    os << "  rankdir=LR;\n  node [shape=circle];\n";
    for (u32 a = 0; a < m.d; ++a) {
        os << "  n" << a << " [label=\"" << m.label(a) << "\\n-> " << doc.coding.values[a] << "\"";
        if (a == doc.start) os << " penwidth=2";
        os << "];\n";
    }
    for (u32 a = 0; a < m.d; ++a) {
        std::map<u32, std::string> pos_of;
        for (u32 pos = 0; pos < m.L; ++pos) {
            std::string& s = pos_of[m.image(a)[pos]];
            if (!s.empty()) s += ",";
            s += std::to_string(pos);
        }
        for (const auto& [tgt, positions] : pos_of)
            os << "  n" << a << " -> n" << tgt << " [label=\"" << positions << "\"];\n";
    }
    os << "}\n";
    return os.str();
}

} // namespace factseq::serialize
