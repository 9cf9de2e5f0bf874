#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "earsift/errors.hpp"
#include "earsift/evaluation.hpp"
#include "earsift/pipeline.hpp"
#include "earsift/template_io.hpp"

namespace py = pybind11;
using namespace earsift;

namespace {

ColorImage color_from_array(py::array_t<double, py::array::c_style | py::array::forcecast> arr) {
    if (arr.ndim() != 3 || arr.shape(2) != 3)
        throw py::value_error("expected an array of shape (height, width, 3)");
    ColorImage img;
    img.height = static_cast<int>(arr.shape(0));
    img.width = static_cast<int>(arr.shape(1));
    img.data.assign(arr.data(), arr.data() + arr.size());
    return img;
}

py::array_t<double> color_to_array(const ColorImage& img) {
    py::array_t<double> arr({img.height, img.width, 3});
    std::copy(img.data.begin(), img.data.end(), arr.mutable_data());
    return arr;
}

GrayImage gray_from_array(py::array_t<double, py::array::c_style | py::array::forcecast> arr) {
    if (arr.ndim() != 2)
        throw py::value_error("expected an array of shape (height, width)");
    GrayImage img;
    img.height = static_cast<int>(arr.shape(0));
    img.width = static_cast<int>(arr.shape(1));
    img.data.assign(arr.data(), arr.data() + arr.size());
    return img;
}

py::array_t<double> gray_to_array(const GrayImage& img) {
    py::array_t<double> arr({img.height, img.width});
    std::copy(img.data.begin(), img.data.end(), arr.mutable_data());
    return arr;
}

Mask mask_from_array(py::array_t<bool, py::array::c_style | py::array::forcecast> arr) {
    if (arr.ndim() != 2)
        throw py::value_error("expected a boolean array of shape (height, width)");
    Mask m;
    m.height = static_cast<int>(arr.shape(0));
    m.width = static_cast<int>(arr.shape(1));
    m.bits.resize(arr.size());
    for (py::ssize_t i = 0; i < arr.size(); ++i)
        m.bits[i] = arr.data()[i] ? 1 : 0;
    return m;
}

py::array_t<double> descriptor_array(const Keypoint& kp) {
    py::array_t<double> arr(SiftParams::descriptor_size);
    std::copy(kp.descriptor.begin(), kp.descriptor.end(), arr.mutable_data());
    return arr;
}

Eigen::Vector3d to_vec3(const std::array<double, 3>& v) {
    return {v[0], v[1], v[2]};
}

} // namespace

PYBIND11_MODULE(_earsift, m) {
    m.doc() = "ear verification: GMM color slice regions + SIFT keypoint matching";

    py::register_exception<Error>(m, "EarsiftError");

    py::class_<ColorImage>(m, "ColorImage")
        .def_static("from_array", &color_from_array, py::arg("array"))
        .def("to_array", &color_to_array)
        .def_readonly("width", &ColorImage::width)
        .def_readonly("height", &ColorImage::height);

    py::class_<GrayImage>(m, "GrayImage")
        .def_static("from_array", &gray_from_array, py::arg("array"))
        .def("to_array", &gray_to_array)
        .def_readonly("width", &GrayImage::width)
        .def_readonly("height", &GrayImage::height);

    py::class_<Mask>(m, "Mask")
        .def_static("from_array", &mask_from_array, py::arg("array"))
        .def_static("all_true", &Mask::all_true, py::arg("width"), py::arg("height"))
        .def_readonly("width", &Mask::width)
        .def_readonly("height", &Mask::height);

    py::class_<PixelSet>(m, "PixelSet")
        .def("__len__", [](const PixelSet& p) { return p.size(); });

    py::class_<GaussianComponent>(m, "GaussianComponent")
        .def(py::init([](double weight, const std::array<double, 3>& mean,
                         const std::array<std::array<double, 3>, 3>& covariance) {
                 GaussianComponent c;
                 c.weight = weight;
                 c.mean = to_vec3(mean);
                 for (int r = 0; r < 3; ++r)
                     for (int col = 0; col < 3; ++col)
                         c.covariance(r, col) = covariance[r][col];
                 return c;
             }),
             py::arg("weight"), py::arg("mean"), py::arg("covariance"))
        .def_readonly("weight", &GaussianComponent::weight)
        .def_property_readonly("mean",
                               [](const GaussianComponent& c) {
                                   return std::array<double, 3>{c.mean[0], c.mean[1], c.mean[2]};
                               })
        .def_property_readonly("covariance", [](const GaussianComponent& c) {
            std::array<std::array<double, 3>, 3> out;
            for (int r = 0; r < 3; ++r)
                for (int col = 0; col < 3; ++col)
                    out[r][col] = c.covariance(r, col);
            return out;
        });

    py::class_<MixtureModel>(m, "MixtureModel")
        .def_readonly("components", &MixtureModel::components)
        .def("__len__", [](const MixtureModel& mm) { return mm.components.size(); });

    py::class_<SiftParams>(m, "SiftParams")
        .def(py::init<>())
        .def_readwrite("octaves", &SiftParams::octaves)
        .def_readwrite("scales_per_octave", &SiftParams::scales_per_octave)
        .def_readwrite("base_sigma", &SiftParams::base_sigma)
        .def_readwrite("initial_upsample", &SiftParams::initial_upsample)
        .def_readwrite("contrast_threshold", &SiftParams::contrast_threshold)
        .def_readwrite("edge_ratio", &SiftParams::edge_ratio)
        .def_readwrite("orientation_bins", &SiftParams::orientation_bins)
        .def_readwrite("peak_ratio", &SiftParams::peak_ratio)
        .def_readwrite("descriptor_clamp", &SiftParams::descriptor_clamp);

    py::class_<Keypoint>(m, "Keypoint")
        .def_readonly("x", &Keypoint::x)
        .def_readonly("y", &Keypoint::y)
        .def_readonly("scale", &Keypoint::scale)
        .def_readonly("orientation", &Keypoint::orientation)
        .def_property_readonly("descriptor", &descriptor_array);

    py::enum_<Strategy>(m, "Strategy")
        .value("nn", Strategy::nn)
        .value("ed", Strategy::ed);

    py::enum_<SegmentationMode>(m, "SegmentationMode")
        .value("prior", SegmentationMode::prior)
        .value("after", SegmentationMode::after);

    py::class_<MatchParams>(m, "MatchParams")
        .def(py::init<>())
        .def_readwrite("strategy", &MatchParams::strategy)
        .def_readwrite("ratio", &MatchParams::ratio)
        .def_readwrite("d_abs", &MatchParams::d_abs)
        .def_readwrite("psi", &MatchParams::psi);

    py::class_<Config>(m, "Config")
        .def(py::init<>())
        .def_readwrite("k", &Config::k)
        .def_readwrite("tau_kl", &Config::tau_kl)
        .def_readwrite("w_min", &Config::w_min)
        .def_readwrite("seed", &Config::seed)
        .def_readwrite("sift", &Config::sift)
        .def_readwrite("match", &Config::match)
        .def("fingerprint", &Config::fingerprint)
        .def_static("load", &Config::load, py::arg("path"));

    py::class_<Template>(m, "Template")
        .def_readonly("subject_id", &Template::subject_id)
        .def_readonly("keypoints", &Template::keypoints)
        .def_readonly("region_provenance", &Template::region_provenance)
        .def_readonly("k_count", &Template::k_count)
        .def_property_readonly("model",
                               [](const Template& t) { return t.source_model; })
        .def("__len__", [](const Template& t) { return t.size(); });

    py::class_<MatchPair>(m, "MatchPair")
        .def_readonly("probe_index", &MatchPair::probe_index)
        .def_readonly("ref_index", &MatchPair::ref_index)
        .def_readonly("distance", &MatchPair::distance);

    py::class_<MatchResult>(m, "MatchResult")
        .def_readonly("strategy", &MatchResult::strategy)
        .def_readonly("pairs", &MatchResult::pairs)
        .def_readonly("match_count", &MatchResult::match_count)
        .def_readonly("d_final", &MatchResult::d_final)
        .def_readonly("normalized_score", &MatchResult::normalized_score);

    py::class_<Decision>(m, "Decision")
        .def_readonly("accept", &Decision::accept)
        .def_readonly("psi", &Decision::psi);

    py::class_<RocPoint>(m, "RocPoint")
        .def_readonly("threshold", &RocPoint::threshold)
        .def_readonly("tp", &RocPoint::tp)
        .def_readonly("fp", &RocPoint::fp);

    py::class_<OperatingPoint>(m, "OperatingPoint")
        .def_readonly("threshold", &OperatingPoint::threshold)
        .def_readonly("accuracy_pct", &OperatingPoint::accuracy_pct)
        .def_readonly("fp_pct", &OperatingPoint::fp_pct)
        .def_readonly("fnr_pct", &OperatingPoint::fnr_pct);

    // imaging
    m.def("load_image", &load_image, py::arg("path"));
    m.def("load_mask", &load_mask, py::arg("path"));
    m.def("save_png", &save_png, py::arg("image"), py::arg("path"));
    m.def("to_grayscale", &to_grayscale, py::arg("image"));
    m.def("equalize_histogram", &equalize_histogram, py::arg("image"));
    m.def("masked_pixels", &masked_pixels, py::arg("image"), py::arg("mask"));

    // mixture + divergence
    m.def(
        "fit_gmm",
        [](const PixelSet& pixels, int k, std::uint64_t seed) { return fit_gmm(pixels, k, seed); },
        py::arg("pixels"), py::arg("k"), py::arg("seed"));
    m.def(
        "component_density",
        [](const GaussianComponent& c, const std::array<double, 3>& d) {
            return component_density(c, to_vec3(d));
        },
        py::arg("component"), py::arg("point"));
    m.def(
        "mixture_density",
        [](const MixtureModel& mm, const std::array<double, 3>& d) {
            return mixture_density(mm, to_vec3(d));
        },
        py::arg("model"), py::arg("point"));
    m.def(
        "gaussian_kl",
        [](const GaussianComponent& a, const GaussianComponent& b) {
            return gaussian_kl(a, b).value;
        },
        py::arg("a"), py::arg("b"));
    m.def(
        "mixture_kl",
        [](const MixtureModel& p, const MixtureModel& q) { return mixture_kl(p, q).first.value; },
        py::arg("p"), py::arg("q"));

    // segmentation
    m.def("classify_pixels", &classify_pixels, py::arg("model"), py::arg("pixels"));

    // sift
    m.def(
        "extract_sift",
        [](const GrayImage& img, const Mask* mask, const SiftParams& params) {
            return extract_sift(img, mask, params);
        },
        py::arg("image"), py::arg("mask") = nullptr, py::arg("params") = SiftParams{});

    // matching
    m.def("match_nn", &match_nn, py::arg("probe"), py::arg("ref"), py::arg("ratio") = 0.8);
    m.def("match_ed", &match_ed, py::arg("probe"), py::arg("ref"), py::arg("d_abs") = 0.35);
    m.def("decide", &decide, py::arg("result"), py::arg("psi"));

    // pipeline
    m.def(
        "enroll",
        [](const ColorImage& img, const Config& config, SegmentationMode mode,
           const std::string& subject, const Mask* mask, const MixtureModel* gate_reference) {
            const ImageFeatures features = compute_features(img, mask, config.sift);
            const int k = mode == SegmentationMode::prior ? 1 : config.k;
            const ColorAnalysis analysis = analyze_colors(features, k, config.seed);
            return assemble_template(analysis, subject, mode, gate_reference, config.tau_kl,
                                     config.w_min)
                .tmpl;
        },
        py::arg("image"), py::arg("config") = Config{},
        py::arg("mode") = SegmentationMode::after, py::arg("subject") = "subject",
        py::arg("mask") = nullptr, py::arg("gate_reference") = nullptr,
        "fit -> segment -> gate -> extract -> fuse; gate_reference defaults to the own model");

    // evaluation
    m.def(
        "generate_synthetic_dataset",
        [](int n_subjects, const std::filesystem::path& out_dir, std::uint64_t seed, int probes) {
            const Dataset ds = generate_synthetic_dataset(n_subjects, out_dir, seed, probes);
            py::list subjects;
            for (const DatasetSubject& s : ds.subjects) {
                py::dict d;
                d["subject_id"] = s.subject_id;
                d["reference"] = s.reference.string();
                py::list probe_paths;
                for (const auto& p : s.probes)
                    probe_paths.append(p.string());
                d["probes"] = probe_paths;
                subjects.append(d);
            }
            return subjects;
        },
        py::arg("n_subjects"), py::arg("out_dir"), py::arg("seed"),
        py::arg("probes_per_subject") = 1);
    m.def("accuracy_from_rates", &accuracy_from_rates, py::arg("fp_pct"), py::arg("fnr_pct"));
    m.def(
        "compute_roc",
        [](const std::vector<double>& genuine, const std::vector<double>& impostor) {
            ScoreSet scores;
            for (double g : genuine)
                scores.genuine.push_back({"", "", g, 0});
            for (double i : impostor)
                scores.impostor.push_back({"", "", i, 0});
            return compute_roc(scores).points;
        },
        py::arg("genuine"), py::arg("impostor"));
    m.def(
        "operating_point",
        [](const std::vector<double>& genuine, const std::vector<double>& impostor) {
            ScoreSet scores;
            for (double g : genuine)
                scores.genuine.push_back({"", "", g, 0});
            for (double i : impostor)
                scores.impostor.push_back({"", "", i, 0});
            return operating_point(compute_roc(scores));
        },
        py::arg("genuine"), py::arg("impostor"));

    // template io
    m.def(
        "save_template",
        [](const Template& tmpl, const Config& config, const std::filesystem::path& path) {
            TemplateFile file;
            file.subject_id = tmpl.subject_id;
            file.config_fingerprint = config.fingerprint();
            file.model = tmpl.source_model;
            file.tmpl = tmpl;
            save_template(file, path);
        },
        py::arg("template"), py::arg("config"), py::arg("path"));
    m.def(
        "load_template",
        [](const std::filesystem::path& path) { return load_template(path).tmpl; },
        py::arg("path"));
}
