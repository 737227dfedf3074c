#include "msmseg/case_io.hpp"

#include <fstream>
#include <glob.h>

#include <nlohmann/json.hpp>

namespace msmseg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_f32(const fs::path& path, const Tensor& data, const std::vector<std::int64_t>& pick) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    std::vector<float> buf;
    buf.reserve(pick.size());
    for (std::int64_t i : pick) buf.push_back(static_cast<float>(data[i]));
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

std::vector<float> read_f32(const fs::path& path, std::size_t expected) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw IoError("missing file " + path.string());
    const auto bytes = static_cast<std::size_t>(in.tellg());
    if (bytes != expected * sizeof(float))
        throw ManifestMismatchError(path.string() + ": size " + std::to_string(bytes) +
                                    " bytes does not match declared dims");
    in.seekg(0);
    std::vector<float> buf(expected);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes));
    return buf;
}

}  // namespace

fs::path write_case(const Case& c, const fs::path& dir) {
    c.volume.validate();
    fs::create_directories(dir);
    const int T = c.volume.T(), M = c.volume.M(), H = c.volume.H(), W = c.volume.W();

    json manifest;
    manifest["format"] = "msmseg-case";
    manifest["version"] = 1;
    manifest["name"] = c.name;
    manifest["dims"] = {{"T", T}, {"M", M}, {"H", H}, {"W", W}};
    manifest["spacing"] = c.volume.spacing;
    manifest["modality_order"] = c.volume.modality_order;
    manifest["seed"] = c.seed;

    json volumes = json::object();
    for (int m = 0; m < M; ++m) {
        const std::string fname = "vol_" + c.volume.modality_order[static_cast<std::size_t>(m)] + ".f32";
        std::vector<std::int64_t> pick;
        pick.reserve(static_cast<std::size_t>(T) * H * W);
        for (int t = 0; t < T; ++t)
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x)
                    pick.push_back(((static_cast<std::int64_t>(t) * M + m) * H + y) * W + x);
        write_f32(dir / fname, c.volume.data, pick);
        volumes[c.volume.modality_order[static_cast<std::size_t>(m)]] = fname;
    }
    manifest["volumes"] = volumes;

    if (c.labels) {
        c.labels->validate();
        if (c.labels->T != T || c.labels->H != H || c.labels->W != W)
            throw ManifestMismatchError("labels dims differ from volume dims");
        std::ofstream out(dir / "labels.u8", std::ios::binary);
        if (!out) throw IoError("cannot open labels.u8 for writing");
        out.write(reinterpret_cast<const char*>(c.labels->labels.data()),
                  static_cast<std::streamsize>(c.labels->labels.size()));
        manifest["labels"] = "labels.u8";
    }

    json boxes = json::array();
    for (const PromptInput& p : c.boxes.per_slice) {
        if (p.mode == PromptMode::kBox)
            boxes.push_back({p.box->x0, p.box->y0, p.box->x1, p.box->y1});
        else
            boxes.push_back(nullptr);
    }
    manifest["boxes"] = boxes;

    const fs::path mpath = dir / "manifest.json";
    std::ofstream out(mpath);
    if (!out) throw IoError("cannot open " + mpath.string() + " for writing");
    out << manifest.dump(2) << "\n";
    return mpath;
}

Case read_case(const fs::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw IoError("missing manifest " + manifest_path.string());
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw IoError("bad manifest json: " + std::string(e.what()));
    }
    const fs::path dir = manifest_path.parent_path();

    Case c;
    try {
        c.name = manifest.value("name", dir.filename().string());
        const auto& dims = manifest.at("dims");
        const int T = dims.at("T"), M = dims.at("M"), H = dims.at("H"), W = dims.at("W");
        if (T < 1 || M < 1 || H < 1 || W < 1)
            throw ManifestMismatchError("manifest dims must be positive");
        c.volume.spacing = manifest.at("spacing");
        c.volume.modality_order = manifest.at("modality_order").get<std::vector<std::string>>();
        if (static_cast<int>(c.volume.modality_order.size()) != M)
            throw ManifestMismatchError("modality_order length != M");
        c.seed = manifest.value("seed", 0);

        c.volume.data = Tensor({T, M, H, W});
        const std::size_t plane = static_cast<std::size_t>(T) * H * W;
        for (int m = 0; m < M; ++m) {
            const std::string& tag = c.volume.modality_order[static_cast<std::size_t>(m)];
            const std::string fname = manifest.at("volumes").at(tag);
            std::vector<float> buf = read_f32(dir / fname, plane);
            std::size_t i = 0;
            for (int t = 0; t < T; ++t)
                for (int y = 0; y < H; ++y)
                    for (int x = 0; x < W; ++x) c.volume.data.at(t, m, y, x) = buf[i++];
        }
        c.volume.validate();

        if (manifest.contains("labels") && !manifest.at("labels").is_null()) {
            const std::string fname = manifest.at("labels");
            std::ifstream lin(dir / fname, std::ios::binary | std::ios::ate);
            if (!lin) throw IoError("missing label file " + (dir / fname).string());
            const auto bytes = static_cast<std::size_t>(lin.tellg());
            if (bytes != plane)
                throw ManifestMismatchError("label file size does not match declared dims");
            lin.seekg(0);
            LabelVolume lv;
            lv.T = T;
            lv.H = H;
            lv.W = W;
            lv.labels.resize(plane);
            lin.read(reinterpret_cast<char*>(lv.labels.data()),
                     static_cast<std::streamsize>(bytes));
            lv.validate();
            c.labels = std::move(lv);
        }

        c.boxes = VolumePrompts::automatic(T);
        if (manifest.contains("boxes")) {
            const auto& boxes = manifest.at("boxes");
            if (static_cast<int>(boxes.size()) != T)
                throw ManifestMismatchError("boxes array length != T");
            for (int t = 0; t < T; ++t) {
                const auto& b = boxes.at(static_cast<std::size_t>(t));
                if (b.is_null()) continue;
                Box box{b.at(0), b.at(1), b.at(2), b.at(3)};
                PromptInput p = PromptInput::boxed(box);
                p.validate(H, W);
                c.boxes.per_slice[static_cast<std::size_t>(t)] = p;
            }
        }
    } catch (const json::exception& e) {
        throw ManifestMismatchError("manifest field error: " + std::string(e.what()));
    }
    return c;
}

Case to_case(const GeneratedCase& g, std::string name) {
    Case c;
    c.name = std::move(name);
    c.volume = g.volume;
    c.labels = g.labels;
    c.boxes = g.boxes;
    c.seed = g.seed;
    return c;
}

std::vector<fs::path> glob_paths(const std::string& pattern) {
    glob_t result{};
    std::vector<fs::path> out;
    if (glob(pattern.c_str(), GLOB_TILDE, nullptr, &result) == 0) {
        for (std::size_t i = 0; i < result.gl_pathc; ++i) out.emplace_back(result.gl_pathv[i]);
    }
    globfree(&result);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace msmseg
