#include <doctest.h>

#include "tracedit/checkpoint.hpp"
#include "tracedit/rng.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace tracedit;

namespace {

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::vector<char> read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::pair<std::string, Tensor<float>>> sample_tensors() {
    RngStream rng(RngPurpose::init, 17);
    return {
        {"alpha", rng.gaussian_tensor<float>({3, 5})},
        {"beta", rng.gaussian_tensor<float>({7})},
        {"gamma", rng.gaussian_tensor<float>({2, 2, 2})},
    };
}

}  // namespace

TEST_CASE("save, load, save round-trips to identical bytes") {
    auto tensors = sample_tensors();
    auto p1 = temp_path("ckpt_rt1.bin"), p2 = temp_path("ckpt_rt2.bin");
    save_checkpoint<float>(p1, "base-model", {{"note", 1}}, tensors);

    LoadedCheckpoint loaded(p1);
    CHECK(loaded.kind() == "base-model");
    std::vector<std::pair<std::string, Tensor<float>>> reloaded;
    for (const auto& name : loaded.tensor_names())
        reloaded.emplace_back(name, loaded.tensor<float>(name));
    save_checkpoint<float>(p2, loaded.kind(), loaded.meta(), reloaded);

    CHECK(read_all(p1) == read_all(p2));
    for (size_t i = 0; i < tensors.size(); ++i) {
        CHECK(reloaded[i].first == tensors[i].first);
        REQUIRE(reloaded[i].second.shape() == tensors[i].second.shape());
        for (int64_t j = 0; j < tensors[i].second.size(); ++j)
            CHECK(reloaded[i].second.data()[j] == tensors[i].second.data()[j]);
    }
}

TEST_CASE("payload offsets are 8-byte aligned") {
    auto p = temp_path("ckpt_align.bin");
    save_checkpoint<float>(p, "edit-suite", {}, sample_tensors());
    LoadedCheckpoint loaded(p);
    for (const auto& entry : loaded.manifest().at("tensors"))
        CHECK(entry.at("byte_offset").get<uint64_t>() % 8 == 0);
}

TEST_CASE("truncated payload is reported with the offending tensor name") {
    auto p = temp_path("ckpt_trunc.bin");
    save_checkpoint<float>(p, "base-model", {}, sample_tensors());
    auto bytes = read_all(p);
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 6));
    out.close();
    try {
        LoadedCheckpoint loaded(p);
        FAIL("expected a throw");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("gamma") != std::string::npos);
    }
}

TEST_CASE("manifest shape edited to mismatch is rejected") {
    auto p = temp_path("ckpt_shape.bin");
    save_checkpoint<float>(p, "base-model", {}, sample_tensors());
    auto bytes = read_all(p);
    // rewrite the manifest with a corrupted shape but the same length
    uint64_t mlen;
    std::memcpy(&mlen, bytes.data() + 8, 8);
    std::string manifest(bytes.begin() + 16, bytes.begin() + 16 + static_cast<long>(mlen));
    auto pos = manifest.find("[3,5]");
    REQUIRE(pos != std::string::npos);
    manifest.replace(pos, 5, "[5,3]");  // same byte count, different shape order is fine; force a bad one
    pos = manifest.find("[5,3]");
    manifest.replace(pos, 5, "[9,9]");
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), 8);
    uint64_t newlen = manifest.size();
    out.write(reinterpret_cast<const char*>(&newlen), 8);
    out.write(manifest.data(), static_cast<std::streamsize>(manifest.size()));
    out.write(bytes.data() + 16 + static_cast<long>(mlen),
              static_cast<std::streamsize>(bytes.size() - 16 - mlen));
    out.close();
    try {
        LoadedCheckpoint loaded(p);
        FAIL("expected a throw");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("alpha") != std::string::npos);
    }
}

TEST_CASE("version and magic are validated") {
    auto p = temp_path("ckpt_magic.bin");
    std::ofstream(p, std::ios::binary) << "NOTMAGIC________________";
    CHECK_THROWS_AS(LoadedCheckpoint{p}, std::runtime_error);
}

TEST_CASE("dtype mismatch on typed read is rejected") {
    auto p = temp_path("ckpt_dtype.bin");
    save_checkpoint<float>(p, "base-model", {}, sample_tensors());
    LoadedCheckpoint loaded(p);
    CHECK_THROWS_AS(loaded.tensor<double>("alpha"), std::runtime_error);
}

TEST_CASE("double precision tensors round-trip") {
    auto p = temp_path("ckpt_f64.bin");
    RngStream rng(RngPurpose::init, 3);
    auto t = rng.gaussian_tensor<double>({4, 4});
    save_checkpoint<double>(p, "base-model", {}, {{"w", t}});
    LoadedCheckpoint loaded(p);
    auto back = loaded.tensor<double>("w");
    for (int64_t i = 0; i < t.size(); ++i) CHECK(back.data()[i] == t.data()[i]);
}
