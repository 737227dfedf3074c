#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "msmseg/case_io.hpp"
#include "msmseg/pipeline.hpp"

using namespace msmseg;

TEST_CASE("default config is valid") {
    ModelConfig cfg;
    CHECK_NOTHROW(validate_config(cfg));
}

TEST_CASE("config invariants are enforced with named errors") {
    ModelConfig cfg;
    cfg.C = 63;
    CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("C must be even"), ConfigError);

    cfg = ModelConfig{};
    cfg.k = 4;  // M = 4
    CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("k"), ConfigError);

    cfg = ModelConfig{};
    cfg.H = 48;  // not divisible by 2^(levels+1) = 32
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);

    cfg = ModelConfig{};
    cfg.n = -1;
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);

    cfg = ModelConfig{};
    cfg.heads = 3;
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);
}

TEST_CASE("derived shapes follow the halving/doubling schedule") {
    ModelConfig cfg;
    CHECK(cfg.emb_h() == 4);
    CHECK(cfg.level_channels(0) == 8);
    CHECK(cfg.level_channels(3) == 64);
    CHECK(cfg.level_h(0) == 32);
    CHECK(cfg.level_h(3) == 4);
}

TEST_CASE("prompt input invariants") {
    PromptInput p = PromptInput::boxed({4, 4, 20, 24});
    CHECK_NOTHROW(p.validate(64, 64));
    PromptInput bad = PromptInput::boxed({4, 4, 4, 24});  // x0 == x1
    CHECK_THROWS_AS(bad.validate(64, 64), PromptModeError);
    PromptInput oob = PromptInput::boxed({-1, 0, 8, 8});
    CHECK_THROWS_AS(oob.validate(64, 64), PromptModeError);
    PromptInput autop = PromptInput::automatic();
    CHECK_NOTHROW(autop.validate(64, 64));
    autop.box = Box{0, 0, 8, 8};
    CHECK_THROWS_AS(autop.validate(64, 64), PromptModeError);
}

TEST_CASE("volume invariants") {
    MultiModalVolume v;
    v.data = Tensor({2, 2, 8, 8});
    v.modality_order = {"A", "B"};
    CHECK_NOTHROW(v.validate());
    v.modality_order = {"A", "A"};
    CHECK_THROWS_AS(v.validate(), ConfigError);
    v.modality_order = {"A", "B"};
    v.spacing = {1.0, 0.0, 1.0};
    CHECK_THROWS_AS(v.validate(), ConfigError);
    v.spacing = {1.0, 1.0, 1.0};
    v.data[0] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(v.validate(), NonFiniteError);
}

// Property: every prediction produced by the model passes its invariants,
// over a few random weight seeds and prompt modes.
TEST_CASE("slice predictions satisfy their field invariants") {
    ModelConfig cfg;
    cfg.H = cfg.W = 32;
    cfg.levels = 3;
    cfg.C = 16;
    cfg.D = 16;
    cfg.heads = 2;
    validate_config(cfg);
    SyntheticSpec spec;
    spec.T = 2;
    spec.H = spec.W = 32;
    spec.axis_y = {6.0, 9.0};
    spec.axis_x = {6.0, 9.0};
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        cfg.seed = seed;
        GeneratedCase g = generate_case(spec, seed);
        auto weights = std::make_shared<ModelWeights>(ModelWeights::init(cfg));
        SessionState state = SessionState::make(cfg, weights);
        auto preds = segment_volume(g.volume, g.boxes, state);
        for (const auto& p : preds) CHECK_NOTHROW(p.validate(cfg));
        auto preds_auto = segment_volume(g.volume, VolumePrompts::automatic(2), state);
        for (const auto& p : preds_auto) CHECK_NOTHROW(p.validate(cfg));
    }
}

TEST_CASE("volume round-trips through the case format bit-exactly") {
    SyntheticSpec spec;
    spec.T = 2;
    GeneratedCase g = generate_case(spec, 11);
    const auto dir = std::filesystem::temp_directory_path() / "msmseg_roundtrip_case";
    std::filesystem::remove_all(dir);
    auto manifest = write_case(to_case(g, "rt"), dir);
    Case c = read_case(manifest);
    REQUIRE(c.volume.data.size() == g.volume.data.size());
    for (std::int64_t i = 0; i < g.volume.data.size(); ++i)
        CHECK(c.volume.data[i] == g.volume.data[i]);
    REQUIRE(c.labels.has_value());
    CHECK(c.labels->labels == g.labels.labels);
    std::filesystem::remove_all(dir);
}
