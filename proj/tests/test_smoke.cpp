#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include "msmseg/model.hpp"
TEST_CASE("model initializes") {
    msmseg::ModelConfig cfg;
    auto w = msmseg::ModelWeights::init(cfg);
    CHECK(w.all().size() > 0);
}
