#include "ctxroute/dataset.hpp"
#include "ctxroute/error.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace ctxroute;
using ctxroute::testing::data_path;

namespace {

Error error_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e;
    }
    FAIL("expected an error");
    return Error(Errc::ParseError, "");
}

}  // namespace

TEST_CASE("generic JSON Lines") {
    const auto rows = ingest(data_path("data/generic_two.jsonl"), DatasetFormat::Generic);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].id == "g1");
    CHECK(rows[0].gold_answer == "William Shakespeare");
    REQUIRE(rows[0].contexts.size() == 1);
    CHECK(rows[0].contexts[0].title == "Hamlet");
    CHECK(rows[1].contexts.empty());
}

TEST_CASE("missing gold answer names the field and line") {
    const auto e = error_of([] {
        (void)ingest_text("{\"id\":\"a\",\"question\":\"q\",\"gold_answer\":\"x\"}\n\n{\"id\":\"b\",\"question\":\"q\"}\n",
                          DatasetFormat::Generic);
    });
    CHECK(e.code() == Errc::ParseError);
    CHECK(std::string(e.what()).find("gold_answer") != std::string::npos);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
}

TEST_CASE("malformed JSON reports a position") {
    auto e = error_of([] { (void)ingest_text("{\"id\": 1, \"question\": \"q\", \"gold_answer\": \"a\"}\n{oops\n", DatasetFormat::Generic); });
    CHECK(e.code() == Errc::ParseError);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    e = error_of([] { (void)ingest_text("[{\"question\": \"q\", \"answer\": ]", DatasetFormat::HotpotQA); });
    CHECK(std::string(e.what()).find("offset") != std::string::npos);
    CHECK(error_of([] { (void)ingest_text("{\"question\": \"\", \"gold_answer\": \"x\"}", DatasetFormat::Generic); })
              .code() == Errc::ParseError);
}

TEST_CASE("hotpotqa fixture keeps its ten passages in order") {
    const auto rows = ingest(data_path("data/hotpotqa_fixture.json"), DatasetFormat::HotpotQA);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].id == "hp-0001");
    CHECK(rows[0].gold_answer == "Calder");
    REQUIRE(rows[0].contexts.size() == 10);
    CHECK(rows[0].contexts[0].title == "Passage 0");
    CHECK(rows[0].contexts[0].text == "Sentence one of passage 0. Sentence two of passage 0.");
    CHECK(rows[0].contexts[9].title == "Morrow Museum");
}

TEST_CASE("musique and 2wiki rows") {
    const auto mq = ingest_text(
        R"({"id":"2hop_1","question":"q?","answer":"a","paragraphs":[{"idx":0,"title":"T","paragraph_text":"P0"},{"idx":1,"title":"U","paragraph_text":"P1"}]})",
        DatasetFormat::Musique);
    REQUIRE(mq.size() == 1);
    CHECK(mq[0].id == "2hop_1");
    REQUIRE(mq[0].contexts.size() == 2);
    CHECK(mq[0].contexts[1].text == "P1");

    const auto tw = ingest_text(R"([{"_id":"w1","question":"q?","answer":"a","context":[["T",["s1","s2"]]]}])",
                                DatasetFormat::TwoWiki);
    REQUIRE(tw.size() == 1);
    CHECK(tw[0].id == "w1");
    CHECK(tw[0].contexts[0].text == "s1 s2");
}

TEST_CASE("format names") {
    CHECK(dataset_format_from_string("2wiki") == DatasetFormat::TwoWiki);
    CHECK(error_of([] { (void)dataset_format_from_string("squad"); }).code() == Errc::UnknownFormat);
    CHECK(ingest_text("   \n", DatasetFormat::Generic).empty());
}

TEST_CASE("passages become round-0 knowledge items") {
    DatasetExample ex{"e", "q", "a", {{"T", "body text"}, {"", "untitled"}}};
    const auto items = passages_to_memory(ex, TokenEstimator(EstimatorMode::Whitespace));
    REQUIRE(items.size() == 2);
    CHECK(items[0].id == "ctx-0");
    CHECK(items[0].text == "T: body text");
    CHECK(items[0].token_length == 3);
    CHECK(items[0].kind == MemoryKind::TaskKnowledge);
    CHECK(items[0].sub_kind == "passage");
    CHECK(items[0].role_tag == "user");
    CHECK(items[0].round_created == 0);
    CHECK(items[1].text == "untitled");
}
