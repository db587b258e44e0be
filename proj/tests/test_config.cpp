#include <doctest.h>

#include "eegda/config.hpp"
#include "eegda/dataio.hpp"

using namespace eegda;

TEST_CASE("defaults carry the published hyperparameters") {
    const PipelineConfig c;
    CHECK(c.weights.alpha == 0.5);
    CHECK(c.weights.gamma1 == 0.1);
    CHECK(c.weights.gamma2 == 0.1);
    CHECK(c.weights.beta1 == 0.1);
    CHECK(c.weights.beta2 == 0.1);
    CHECK(c.weights.beta3 == 0.5);
    CHECK(c.weights.beta4 == 0.1);
    CHECK(c.weights.t_m == 10.0);
    CHECK(c.softmax_threshold == 0.99);
    CHECK(c.batch_size == 64);
    CHECK(c.tau == 0.9);
    CHECK(c.mode == InferenceMode::PcTta);
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("key-value parsing with comments") {
    const auto kv = parse_key_values("# header\nloss.alpha = 0.25\n\n  tta.mode=no_tta  # trailing\n");
    CHECK(kv.size() == 2);
    CHECK(kv.at("loss.alpha") == "0.25");
    CHECK(kv.at("tta.mode") == "no_tta");
    CHECK_THROWS_WITH_AS(parse_key_values("a = 1\nnot a pair\n"), doctest::Contains("line 2"), ConfigError);
}

TEST_CASE("apply consumes known keys and leaves unknown ones") {
    KeyValues kv = {{"loss.alpha", "0.25"}, {"tta.noise_levels", "0.2, 0.3, 0.4"}, {"bogus.key", "1"},
                    {"net.extractor", "20,10"}, {"tta.mode", "full_tta"}};
    PipelineConfig c;
    c.apply(kv);
    CHECK(c.weights.alpha == 0.25);
    CHECK(c.noise_levels.size() == 3);
    CHECK(c.tta_count() == 5);
    CHECK(c.extractor[1] == 10);
    CHECK(c.mode == InferenceMode::FullTta);
    REQUIRE(kv.size() == 1);
    CHECK_THROWS_WITH_AS(reject_unknown(kv), doctest::Contains("bogus.key"), ConfigError);
}

TEST_CASE("bad values are config errors") {
    PipelineConfig c;
    KeyValues kv = {{"loss.alpha", "abc"}};
    CHECK_THROWS_AS(c.apply(kv), ConfigError);
    kv = {{"tta.mode", "sometimes"}};
    CHECK_THROWS_AS(c.apply(kv), ConfigError);
    PipelineConfig bad;
    bad.resample_factors = {3.0};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    PipelineConfig neg;
    neg.weights.beta3 = -1.0;
    CHECK_THROWS_AS(neg.validate(), ConfigError);
}

TEST_CASE("config snapshot round-trips") {
    PipelineConfig c;
    c.seed = 99;
    c.weights.beta4 = 0.3;
    c.bands = "alpha,beta";
    KeyValues kv = c.to_key_values();
    CHECK(kv.count("train.freeze_norm_after_pretrain") == 1);
    const std::string text = format_key_values(kv);
    KeyValues parsed = parse_key_values(text);
    PipelineConfig back;
    back.apply(parsed);
    CHECK(parsed.empty());
    CHECK(back.to_key_values() == c.to_key_values());
}

TEST_CASE("synth spec keys") {
    dataio::SynthSpec s;
    KeyValues kv = {{"synth.channels", "8"}, {"synth.target_subjects", "4"}, {"loss.alpha", "1"}};
    s.apply(kv);
    CHECK(s.channels == 8);
    CHECK(s.target_subjects == 4);
    CHECK(kv.size() == 1);
    s.target_subjects = 0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s.target_subjects = 1;
    s.sample_rate = 64.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("inference modes parse") {
    CHECK(parse_inference_mode("pc_tta") == InferenceMode::PcTta);
    CHECK(to_string(InferenceMode::NoTta) == "no_tta");
    CHECK_THROWS_AS(parse_inference_mode("maybe"), ConfigError);
}
