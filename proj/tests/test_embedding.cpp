#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "memefuse/embedding.hpp"
#include "memefuse/error.hpp"

using namespace memefuse;

TEST_CASE("embedding table counts rows and appends <unk>") {
    EmbeddingTable t = EmbeddingTable::parse(
        "cat 1 2 3 4\n"
        "dog 5 6 7 8\n"
        "fish 9 10 11 12\n",
        "<t>");
    CHECK(t.vocab_size() == 4);  // 3 + <unk>
    CHECK(t.dim() == 4);
    Tensor unk = t.row(t.unk_index());
    for (std::size_t i = 0; i < 4; ++i) CHECK(unk[i] == 0.0);
}

TEST_CASE("explicit <unk> row is reused") {
    EmbeddingTable t = EmbeddingTable::parse(
        "cat 1 2\n"
        "<unk> 9 9\n",
        "<t>");
    CHECK(t.vocab_size() == 2);
    CHECK(t.row(t.unk_index())[0] == 9.0);
}

TEST_CASE("inconsistent dimension reports the line") {
    try {
        EmbeddingTable::parse("a 1 2 3\nb 1 2\n", "<t>");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        std::string msg = e.what();
        CHECK(msg.find(":2") != std::string::npos);
        CHECK(msg.find("expected 3") != std::string::npos);
    }
    CHECK_THROWS_AS(EmbeddingTable::parse("a 1 2\na 3 4\n", "<t>"), DataError);
    CHECK_THROWS_AS(EmbeddingTable::parse("a 1 x\n", "<t>"), DataError);
    CHECK_THROWS_AS(EmbeddingTable::parse("", "<t>"), DataError);
}

TEST_CASE("lookup maps tokens to rows, OOV to <unk>") {
    EmbeddingTable t = EmbeddingTable::parse(
        "cat 1 2\n"
        "dog 3 4\n",
        "<t>");
    Tensor one = t.lookup({"<unk>"});
    REQUIRE(one.shape() == std::vector<std::size_t>{1, 2});
    CHECK(one.at(0, 0) == 0.0);

    Tensor known = t.lookup({"dog"});
    CHECK(known.at(0, 0) == 3.0);
    CHECK(known.at(0, 1) == 4.0);

    // hand-assembled oracle for a mixed sequence
    Tensor mixed = t.lookup({"cat", "zebra", "dog"});
    Tensor want({3, 2}, {1, 2, 0, 0, 3, 4});
    CHECK(mixed == want);

    CHECK_THROWS_AS(t.lookup({}), UsageError);
}

TEST_CASE("lookup shape law") {
    EmbeddingTable t = EmbeddingTable::parse("a 1 2 3\n", "<t>");
    for (std::size_t len : {1u, 5u, 17u}) {
        std::vector<std::string> seq(len, "a");
        CHECK(t.lookup(seq).shape() == std::vector<std::size_t>{len, 3});
    }
}

TEST_CASE("row order in the file does not change lookups") {
    EmbeddingTable a = EmbeddingTable::parse("x 1 2\ny 3 4\n", "<t>");
    EmbeddingTable b = EmbeddingTable::parse("y 3 4\nx 1 2\n", "<t>");
    for (const char* tok : {"x", "y", "oov"}) {
        CHECK(a.lookup({tok}) == b.lookup({tok}));
    }
}

TEST_CASE("save/reload round-trips bitwise") {
    EmbeddingTable t = EmbeddingTable::parse(
        "alpha 0.1 -2.5e-17 3\n"
        "beta 1e300 -0.333333333333333315 0\n",
        "<t>");
    std::string path =
        (std::filesystem::temp_directory_path() / "memefuse_emb_roundtrip.txt").string();
    t.save(path);
    EmbeddingTable r = EmbeddingTable::load(path);
    CHECK(r.vocab_size() == t.vocab_size());
    for (const char* tok : {"alpha", "beta", "<unk>", "oov"}) {
        CHECK(r.lookup({tok}) == t.lookup({tok}));
    }
    std::remove(path.c_str());
}

TEST_CASE("vector store round-trip and errors") {
    VectorStore s = VectorStore::parse(
        "{\"id\": \"r1\", \"vec\": [1.0, 2.0]}\n"
        "{\"id\": \"r2\", \"vec\": [3.5, -4.25]}\n",
        "<t>");
    CHECK(s.size() == 2);
    CHECK(s.dim() == 2);
    CHECK(s.get("r2")[1] == -4.25);
    try {
        s.get("missing");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("missing") != std::string::npos);
    }

    CHECK_THROWS_AS(VectorStore::parse("{\"id\": \"a\", \"vec\": [1]}\n"
                                       "{\"id\": \"b\", \"vec\": [1, 2]}\n",
                                       "<t>"),
                    DataError);
    CHECK_THROWS_AS(VectorStore::parse("not json\n", "<t>"), DataError);
    CHECK_THROWS_AS(VectorStore::parse("{\"id\": \"a\", \"vec\": [1]}\n"
                                       "{\"id\": \"a\", \"vec\": [2]}\n",
                                       "<t>"),
                    DataError);
}

TEST_CASE("vector store serves every stored id") {
    VectorStore s;
    for (int i = 0; i < 20; ++i) {
        s.insert("id" + std::to_string(i), Tensor::vector({double(i), double(i) + 0.5}));
    }
    for (int i = 0; i < 20; ++i) {
        CHECK(s.get("id" + std::to_string(i))[0] == double(i));
    }
}
