#include "guard/model/synthetic.hpp"

#include <random>

#include "guard/error.hpp"

namespace guard::model {

std::vector<SyntheticClass> synthetic_classes(SyntheticKind kind) {
    if (kind == SyntheticKind::Safety) {
        return {
            {"safe", "an ordinary scene"},
            {"unsafe\ncategory: horror", "a horror scene"},
            {"unsafe\ncategory: gross", "a gross scene"},
        };
    }
    return {
        {"gender: male; age: children; race: asian", "a young asian boy"},
        {"gender: female; age: elderly; race: african", "an elderly african woman"},
        {"gender: male; age: middle-aged; race: caucasian", "a middle aged caucasian man"},
        {"gender: female; age: young adult; race: latino", "a young latina woman"},
    };
}

std::vector<int> encode_text(const std::string& text, int bos_token) {
    std::vector<int> out{bos_token};
    for (unsigned char c : text) out.push_back(static_cast<int>(c));
    out.push_back(kEosToken);
    return out;
}

std::vector<Sample> make_synthetic_dataset(const SyntheticSpec& spec) {
    const auto classes = synthetic_classes(spec.kind);
    const int n_classes = static_cast<int>(classes.size());
    if (spec.raw_vision_dim < n_classes)
        throw InvalidConfig("raw_vision_dim must be >= class count");
    const int bos = spec.kind == SyntheticKind::Safety ? kBosSafety : kBosFairness;

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, spec.noise);
    std::vector<Sample> out;
    out.reserve(static_cast<std::size_t>(spec.samples));
    for (int i = 0; i < spec.samples; ++i) {
        const int cls = i % n_classes;
        Sample s;
        s.features = Eigen::RowVectorXd::Zero(spec.raw_vision_dim);
        for (int j = 0; j < spec.raw_vision_dim; ++j) s.features(j) = noise(rng);
        s.features(cls) += 3.0;
        s.tokens = encode_text(classes[static_cast<std::size_t>(cls)].answer, bos);
        s.captions = encode_text(classes[static_cast<std::size_t>(cls)].caption, bos);
        out.push_back(std::move(s));
    }
    return out;
}

int synthetic_class_of(const Eigen::RowVectorXd& features, SyntheticKind kind) {
    const int n_classes = static_cast<int>(synthetic_classes(kind).size());
    Eigen::Index best = 0;
    features.head(n_classes).maxCoeff(&best);
    return static_cast<int>(best);
}

}  // namespace guard::model
