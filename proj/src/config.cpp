#include "msmseg/config.hpp"

#include "msmseg/errors.hpp"

namespace msmseg {

ModelConfig validate_config(const ModelConfig& cfg) {
    if (cfg.H < 1 || cfg.W < 1) throw ConfigError("H and W must be positive");
    if (cfg.levels < 1) throw ConfigError("levels must be >= 1");
    if (cfg.C < 2 || cfg.C % 2 != 0) throw ConfigError("C must be even");
    if (cfg.C % (1 << (cfg.levels - 1)) != 0)
        throw ConfigError("C must be divisible by 2^(levels-1) for the channel-doubling schedule");
    if (cfg.D < 1) throw ConfigError("D must be positive");
    if (cfg.D % cfg.heads != 0) throw ConfigError("heads must divide D");
    if (cfg.D % 4 != 0) throw ConfigError("D must be divisible by 4 (2-D sinusoidal encoding)");
    if (cfg.M < 1) throw ConfigError("M must be >= 1");
    if (cfg.k > cfg.M - 1) throw ConfigError("k must satisfy k <= M-1");
    if (cfg.k < 0) throw ConfigError("k must be >= 0");
    if (cfg.n < 0) throw ConfigError("n must be >= 0");
    if (cfg.num_classes < 2) throw ConfigError("num_classes must be >= 2");
    if (cfg.num_queries < 0) throw ConfigError("num_queries must be >= 0");
    const int div = 1 << (cfg.levels + 1);
    if (cfg.H % div != 0 || cfg.W % div != 0)
        throw ConfigError("H and W must be divisible by 2^(levels+1)");
    return cfg;
}

const std::vector<std::string>& default_modality_order() {
    static const std::vector<std::string> order = {"FLAIR", "T1", "T1c", "T2"};
    return order;
}

}  // namespace msmseg
