#pragma once

#include "ctxroute/budget.hpp"
#include "ctxroute/memory.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace ctxroute {

struct Passage {
    std::string title;
    std::string text;
};

struct DatasetExample {
    std::string id;
    std::string question;
    std::string gold_answer;
    std::vector<Passage> contexts;
};

enum class DatasetFormat { HotpotQA, Musique, TwoWiki, Generic };

std::string_view to_string(DatasetFormat f) noexcept;
/// Throws UnknownFormat.
DatasetFormat dataset_format_from_string(std::string_view name);

/// Reads a dataset file. HotpotQA and 2Wiki accept a JSON array or JSON
/// Lines; MuSiQue and generic are JSON Lines. Throws ParseError carrying the
/// line (JSON Lines) or byte offset (JSON array) of the offending record.
std::vector<DatasetExample> ingest(const std::string& path, DatasetFormat format);
std::vector<DatasetExample> ingest_text(std::string_view content, DatasetFormat format);

/// Passages as round-0 task-knowledge items ("ctx-<k>", role_tag "user").
std::vector<MemoryItem> passages_to_memory(const DatasetExample& example, const TokenEstimator& est);

}  // namespace ctxroute
