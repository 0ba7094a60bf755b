#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "modecomb/archive.hpp"
#include "modecomb/train.hpp"

using namespace modecomb;

namespace {

Architecture archive_arch(bool layernorm) {
    Architecture arch;
    arch.input_dim = 5;
    arch.num_classes = 4;
    arch.depth = 3;
    arch.base_width = 6;
    arch.width_multiplier = 2;
    arch.layernorm = layernorm;
    return arch;
}

// Rebuilds an archive around a tampered header, keeping the framing valid.
std::string reframe(const std::string& header, const std::string& payload) {
    std::string out;
    out.append(kArchiveMagic, 4);
    detail::put_u32_le(out, static_cast<std::uint32_t>(header.size()));
    out += header;
    out += payload;
    return out;
}

struct ArchiveParts {
    std::string header;
    std::string payload;
};

ArchiveParts split_archive(const std::string& bytes) {
    const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::uint32_t header_len = detail::get_u32_le(data + 4);
    return {bytes.substr(8, header_len), bytes.substr(8 + header_len)};
}

struct TempDir {
    std::filesystem::path path;
    TempDir() : path(std::filesystem::temp_directory_path() /
                     ("modecomb-test-" + std::to_string(::getpid()))) {
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("weight archives round-trip bitwise with their metadata") {
    for (const bool layernorm : {false, true}) {
        const Architecture arch = archive_arch(layernorm);
        const WeightsF weights = init_params<float>(arch, 31);
        ArchiveMeta meta;
        meta.seed = 123456789;
        meta.config_digest = "deadbeef00112233";

        const std::string bytes = serialize_weights(weights, meta);
        CHECK(bytes == serialize_weights(weights, meta));  // byte-stable

        ArchiveMeta loaded_meta;
        const WeightsF loaded = deserialize_weights(bytes, &loaded_meta);
        CHECK(bitwise_equal(weights, loaded));
        CHECK(loaded.arch == arch);
        CHECK(loaded_meta.seed == meta.seed);
        CHECK(loaded_meta.config_digest == meta.config_digest);
    }
}

TEST_CASE("archives survive the filesystem and omit empty digests") {
    const TempDir tmp;
    const Architecture arch = archive_arch(true);
    const WeightsF weights = init_params<float>(arch, 7);
    ArchiveMeta meta;
    meta.seed = 42;

    save_weights(weights, tmp.file("model.mcw"), meta);
    ArchiveMeta loaded_meta;
    const WeightsF loaded = load_weights(tmp.file("model.mcw"), &loaded_meta);
    CHECK(bitwise_equal(weights, loaded));
    CHECK(loaded_meta.seed == 42);
    CHECK(loaded_meta.config_digest.empty());

    CHECK_THROWS_AS(load_weights(tmp.file("missing.mcw")), IoError);
}

TEST_CASE("structural corruption is reported with its byte offset") {
    const WeightsF weights = init_params<float>(archive_arch(false), 1);
    const std::string bytes = serialize_weights(weights);

    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    try {
        deserialize_weights(bad_magic);
        FAIL("bad magic accepted");
    } catch (const FormatError& e) {
        CHECK(e.byte_offset == 0);
    }

    try {
        deserialize_weights(bytes.substr(0, 3));
        FAIL("3-byte archive accepted");
    } catch (const FormatError& e) {
        CHECK(e.byte_offset == 0);
    }

    try {
        deserialize_weights(bytes.substr(0, 6));
        FAIL("truncated length accepted");
    } catch (const FormatError& e) {
        CHECK(e.byte_offset == 4);
    }

    try {
        deserialize_weights(bytes.substr(0, 20));  // header cut short
        FAIL("truncated header accepted");
    } catch (const FormatError& e) {
        CHECK(e.byte_offset == 8);
    }
}

TEST_CASE("header tampering is rejected") {
    const WeightsF weights = init_params<float>(archive_arch(false), 2);
    const auto [header, payload] = split_archive(serialize_weights(weights));

    CHECK_THROWS_AS(deserialize_weights(reframe("bogus.key 3\n" + header, payload)),
                    ValidationError);

    // A tensor line without its dtype marker is malformed, and the offset
    // points into the header.
    std::string broken = header;
    const std::size_t f32 = broken.find(" f32\n");
    REQUIRE(f32 != std::string::npos);
    broken.erase(f32, 4);
    try {
        deserialize_weights(reframe(broken, payload));
        FAIL("malformed tensor line accepted");
    } catch (const FormatError& e) {
        CHECK(e.byte_offset >= 8);
    }

    // Declaring a different width makes the tensor list inconsistent.
    std::string resized = header;
    const std::size_t width_pos = resized.find("arch.base_width 6");
    REQUIRE(width_pos != std::string::npos);
    resized[width_pos + std::string("arch.base_width ").size()] = '7';
    CHECK_THROWS_AS(deserialize_weights(reframe(resized, payload)), ValidationError);

    // Unparseable numeric value.
    std::string garbled = header;
    const std::size_t depth_pos = garbled.find("arch.depth 3");
    garbled.replace(depth_pos, std::string("arch.depth 3").size(), "arch.depth xy");
    CHECK_THROWS_AS(deserialize_weights(reframe(garbled, payload)), FormatError);
}

TEST_CASE("payload length mismatches are called out in floats") {
    const WeightsF weights = init_params<float>(archive_arch(false), 3);
    const std::string bytes = serialize_weights(weights);

    CHECK_THROWS_WITH(deserialize_weights(bytes.substr(0, bytes.size() - 4)),
                      Catch::Matchers::ContainsSubstring("floats"));
    CHECK_THROWS_AS(deserialize_weights(bytes + std::string(8, '\0')), ValidationError);
}

TEST_CASE("permutation files round-trip and validate") {
    const TempDir tmp;
    const Architecture arch = archive_arch(false);
    PermutationSet pi = PermutationSet::identity(arch);
    SplitMix64 rng(9);
    for (auto& p : pi.perms) shuffle(p, rng);

    save_permutations(pi, tmp.file("pi.json"));
    const PermutationSet loaded = load_permutations(tmp.file("pi.json"));
    CHECK(loaded == pi);

    {
        std::ofstream bad(tmp.file("bad.json"));
        bad << "{nope";
    }
    CHECK_THROWS_AS(load_permutations(tmp.file("bad.json")), ParseError);
    {
        std::ofstream empty(tmp.file("empty.json"));
        empty << "{}";
    }
    CHECK_THROWS_AS(load_permutations(tmp.file("empty.json")), ParseError);
    {
        std::ofstream repeat(tmp.file("repeat.json"));
        repeat << R"({"layers": [[0, 0, 1]]})";
    }
    CHECK_THROWS_AS(load_permutations(tmp.file("repeat.json")), ValidationError);
    CHECK_THROWS_AS(load_permutations(tmp.file("nothere.json")), IoError);
}
