#include "ctxroute/dataset.hpp"

#include "ctxroute/error.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace ctxroute {

using nlohmann::json;

std::string_view to_string(DatasetFormat f) noexcept {
    switch (f) {
        case DatasetFormat::HotpotQA: return "hotpotqa";
        case DatasetFormat::Musique:  return "musique";
        case DatasetFormat::TwoWiki:  return "2wiki";
        case DatasetFormat::Generic:  return "generic";
    }
    return "generic";
}

DatasetFormat dataset_format_from_string(std::string_view name) {
    if (name == "hotpotqa") return DatasetFormat::HotpotQA;
    if (name == "musique") return DatasetFormat::Musique;
    if (name == "2wiki" || name == "2wikimultihop") return DatasetFormat::TwoWiki;
    if (name == "generic") return DatasetFormat::Generic;
    throw Error(Errc::UnknownFormat, "unknown dataset format '" + std::string(name) + "'");
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

const json& require(const json& row, const char* field, const std::string& where) {
    if (!row.is_object() || !row.contains(field) || row.at(field).is_null())
        throw Error(Errc::ParseError, fmt::format("{}: missing field '{}'", where, field));
    return row.at(field);
}

std::string require_string(const json& row, const char* field, const std::string& where) {
    const auto& v = require(row, field, where);
    if (!v.is_string()) throw Error(Errc::ParseError, fmt::format("{}: field '{}' is not a string", where, field));
    std::string s = v.get<std::string>();
    if (trim(s).empty()) throw Error(Errc::ParseError, fmt::format("{}: field '{}' is empty", where, field));
    return s;
}

std::string id_of(const json& row, const char* field, std::size_t index) {
    if (row.contains(field)) {
        const auto& v = row.at(field);
        if (v.is_string()) return v.get<std::string>();
        if (v.is_number_integer()) return std::to_string(v.get<long long>());
    }
    return fmt::format("ex{}", index);
}

// [[title, [sentence, ...]], ...] as used by HotpotQA and 2Wiki.
std::vector<Passage> sentence_contexts(const json& ctx, const std::string& where) {
    std::vector<Passage> out;
    if (!ctx.is_array()) throw Error(Errc::ParseError, where + ": field 'context' is not an array");
    for (const auto& entry : ctx) {
        if (!entry.is_array() || entry.size() != 2 || !entry[0].is_string())
            throw Error(Errc::ParseError, where + ": context entries must be [title, sentences]");
        Passage p;
        p.title = entry[0].get<std::string>();
        if (entry[1].is_string()) {
            p.text = trim(entry[1].get<std::string>());
        } else {
            for (const auto& sent : entry[1]) {
                const std::string s = trim(sent.get<std::string>());
                if (s.empty()) continue;
                if (!p.text.empty()) p.text += ' ';
                p.text += s;
            }
        }
        out.push_back(std::move(p));
    }
    return out;
}

DatasetExample convert(const json& row, DatasetFormat format, std::size_t index, const std::string& where) {
    DatasetExample ex;
    switch (format) {
        case DatasetFormat::HotpotQA:
        case DatasetFormat::TwoWiki:
            ex.id = id_of(row, "_id", index);
            if (ex.id == fmt::format("ex{}", index)) ex.id = id_of(row, "id", index);
            ex.question = require_string(row, "question", where);
            ex.gold_answer = require_string(row, "answer", where);
            if (row.contains("context")) ex.contexts = sentence_contexts(row.at("context"), where);
            break;
        case DatasetFormat::Musique: {
            ex.id = id_of(row, "id", index);
            ex.question = require_string(row, "question", where);
            ex.gold_answer = require_string(row, "answer", where);
            if (row.contains("paragraphs")) {
                for (const auto& para : row.at("paragraphs")) {
                    Passage p;
                    p.title = para.value("title", std::string{});
                    p.text = require_string(para, "paragraph_text", where);
                    ex.contexts.push_back(std::move(p));
                }
            }
            break;
        }
        case DatasetFormat::Generic: {
            ex.id = id_of(row, "id", index);
            ex.question = require_string(row, "question", where);
            ex.gold_answer = require_string(row, "gold_answer", where);
            if (row.contains("contexts")) {
                for (const auto& c : row.at("contexts")) {
                    Passage p;
                    if (c.is_array() && c.size() == 2) {
                        p.title = c[0].get<std::string>();
                        p.text = c[1].get<std::string>();
                    } else {
                        p.title = c.value("title", std::string{});
                        p.text = require_string(c, "text", where);
                    }
                    ex.contexts.push_back(std::move(p));
                }
            }
            break;
        }
    }
    return ex;
}

}  // namespace

std::vector<DatasetExample> ingest_text(std::string_view content, DatasetFormat format) {
    std::vector<DatasetExample> out;
    const auto first = content.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return out;

    try {
        if (content[first] == '[') {
            if (format == DatasetFormat::Musique || format == DatasetFormat::Generic)
                throw Error(Errc::ParseError, fmt::format("{} datasets are JSON Lines, found a JSON array", to_string(format)));
            json doc;
            try {
                doc = json::parse(content);
            } catch (const json::parse_error& e) {
                throw Error(Errc::ParseError, fmt::format("offset {}: {}", e.byte, e.what()));
            }
            for (std::size_t i = 0; i < doc.size(); ++i)
                out.push_back(convert(doc[i], format, i, fmt::format("record {}", i)));
            return out;
        }

        std::istringstream lines{std::string(content)};
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(lines, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            json row;
            try {
                row = json::parse(line);
            } catch (const json::parse_error& e) {
                throw Error(Errc::ParseError, fmt::format("line {}, offset {}: {}", line_no, e.byte, e.what()));
            }
            out.push_back(convert(row, format, out.size(), fmt::format("line {}", line_no)));
        }
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, e.what());
    }
    return out;
}

std::vector<DatasetExample> ingest(const std::string& path, DatasetFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::ParseError, "cannot open dataset '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return ingest_text(buf.str(), format);
}

std::vector<MemoryItem> passages_to_memory(const DatasetExample& example, const TokenEstimator& est) {
    std::vector<MemoryItem> out;
    for (std::size_t k = 0; k < example.contexts.size(); ++k) {
        const auto& p = example.contexts[k];
        std::string text = p.title.empty() ? p.text : p.title + ": " + p.text;
        out.push_back(make_item(fmt::format("ctx-{}", k), std::move(text), "user", "input", MemoryKind::TaskKnowledge,
                                "passage", 0, est));
    }
    return out;
}

}  // namespace ctxroute
