#include "earsift/template_io.hpp"

#include "earsift/errors.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace earsift {

using nlohmann::json;

namespace {

json model_to_json(const MixtureModel& model) {
    json components = json::array();
    for (const GaussianComponent& c : model.components) {
        json jc;
        jc["weight"] = c.weight;
        jc["mean"] = {c.mean[0], c.mean[1], c.mean[2]};
        json cov = json::array();
        for (int r = 0; r < 3; ++r)
            for (int col = 0; col < 3; ++col)
                cov.push_back(c.covariance(r, col));
        jc["covariance"] = std::move(cov);
        components.push_back(std::move(jc));
    }
    return json{{"components", std::move(components)}};
}

MixtureModel model_from_json(const json& j) {
    MixtureModel model;
    for (const json& jc : j.at("components")) {
        GaussianComponent c;
        c.weight = jc.at("weight").get<double>();
        const auto mean = jc.at("mean");
        if (mean.size() != 3)
            raise_data("parse-failure", "mean must have 3 entries");
        for (int i = 0; i < 3; ++i)
            c.mean[i] = mean[i].get<double>();
        const auto cov = jc.at("covariance");
        if (cov.size() != 9)
            raise_data("parse-failure", "covariance must have 9 entries");
        for (int r = 0; r < 3; ++r)
            for (int col = 0; col < 3; ++col)
                c.covariance(r, col) = cov[3 * r + col].get<double>();
        model.components.push_back(std::move(c));
    }
    if (model.components.empty())
        raise_data("parse-failure", "model has no components");
    return model;
}

json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        raise_io("file-not-found", "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        raise_data("parse-failure", path.string() + ": " + e.what());
    }
}

void write_json(const json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        raise_io("io-failure", "cannot write " + path.string());
    out << j.dump(1) << "\n";
    if (!out)
        raise_io("io-failure", "short write to " + path.string());
}

} // namespace

std::vector<RegionSummary> summarize_regions(const std::vector<SliceRegion>& regions) {
    std::vector<RegionSummary> out;
    out.reserve(regions.size());
    for (const SliceRegion& r : regions) {
        // reported divergences clamp at zero; raw values stay internal
        std::optional<double> kl = r.kl_to_reference;
        if (kl && *kl < 0.0)
            kl = 0.0;
        out.push_back({r.component_index, r.pixel_count(), r.weight_fraction, r.kept, kl});
    }
    return out;
}

void save_template(const TemplateFile& file, const std::filesystem::path& path) {
    json j;
    j["format_version"] = file.format_version;
    j["subject_id"] = file.subject_id;
    j["config_fingerprint"] = file.config_fingerprint;
    j["model"] = model_to_json(file.model);
    j["k_count"] = file.tmpl.k_count;

    json regions = json::array();
    for (const RegionSummary& r : file.regions) {
        json jr;
        jr["component_index"] = r.component_index;
        jr["pixel_count"] = r.pixel_count;
        jr["weight_fraction"] = r.weight_fraction;
        jr["kept"] = r.kept;
        if (r.kl_to_reference)
            jr["kl_to_reference"] = *r.kl_to_reference;
        else
            jr["kl_to_reference"] = nullptr;
        regions.push_back(std::move(jr));
    }
    j["regions"] = std::move(regions);

    json keypoints = json::array();
    for (std::size_t i = 0; i < file.tmpl.keypoints.size(); ++i) {
        const Keypoint& kp = file.tmpl.keypoints[i];
        json jk;
        jk["x"] = kp.x;
        jk["y"] = kp.y;
        jk["scale"] = kp.scale;
        jk["orientation"] = kp.orientation;
        jk["octave"] = kp.octave;
        jk["level"] = kp.level;
        jk["region"] = file.tmpl.region_provenance[i];
        jk["descriptor"] = kp.descriptor;
        keypoints.push_back(std::move(jk));
    }
    j["keypoints"] = std::move(keypoints);

    write_json(j, path);
}

TemplateFile load_template(const std::filesystem::path& path) {
    const json j = load_json(path);
    TemplateFile file;
    try {
        file.format_version = j.at("format_version").get<int>();
        if (file.format_version != kTemplateFormatVersion)
            raise_data("parse-failure",
                       "unsupported template format version " +
                           std::to_string(file.format_version));
        file.subject_id = j.at("subject_id").get<std::string>();
        file.config_fingerprint = j.at("config_fingerprint").get<std::string>();
        file.model = model_from_json(j.at("model"));

        for (const json& jr : j.at("regions")) {
            RegionSummary r;
            r.component_index = jr.at("component_index").get<int>();
            r.pixel_count = jr.at("pixel_count").get<std::size_t>();
            r.weight_fraction = jr.at("weight_fraction").get<double>();
            r.kept = jr.at("kept").get<bool>();
            if (jr.contains("kl_to_reference") && !jr.at("kl_to_reference").is_null())
                r.kl_to_reference = jr.at("kl_to_reference").get<double>();
            file.regions.push_back(std::move(r));
        }

        file.tmpl.subject_id = file.subject_id;
        file.tmpl.source_model = file.model;
        file.tmpl.k_count = j.at("k_count").get<int>();
        for (const json& jk : j.at("keypoints")) {
            Keypoint kp;
            kp.x = jk.at("x").get<double>();
            kp.y = jk.at("y").get<double>();
            kp.scale = jk.at("scale").get<double>();
            kp.orientation = jk.at("orientation").get<double>();
            kp.octave = jk.at("octave").get<int>();
            kp.level = jk.at("level").get<int>();
            const auto& desc = jk.at("descriptor");
            if (desc.size() != SiftParams::descriptor_size)
                raise_data("parse-failure", "descriptor must have 128 entries");
            for (int i = 0; i < SiftParams::descriptor_size; ++i)
                kp.descriptor[i] = desc[i].get<double>();
            file.tmpl.keypoints.push_back(std::move(kp));
            file.tmpl.region_provenance.push_back(jk.at("region").get<int>());
        }
    } catch (const json::exception& e) {
        raise_data("parse-failure", path.string() + ": " + e.what());
    }
    return file;
}

void save_model(const MixtureModel& model, const std::filesystem::path& path) {
    write_json(model_to_json(model), path);
}

MixtureModel load_model(const std::filesystem::path& path) {
    const json j = load_json(path);
    try {
        if (j.contains("model"))
            return model_from_json(j.at("model")); // full template file
        return model_from_json(j);
    } catch (const json::exception& e) {
        raise_data("parse-failure", path.string() + ": " + e.what());
    }
}

} // namespace earsift
