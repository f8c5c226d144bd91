#include <algorithm>
#include <cctype>

#include "sysarch/evaluation.hpp"

namespace sysarch {

bool natural_less(const std::string& a, const std::string& b)
{
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < a.size() && j < b.size()) {
        const bool da = std::isdigit(static_cast<unsigned char>(a[i])) != 0;
        const bool db = std::isdigit(static_cast<unsigned char>(b[j])) != 0;
        if (da && db) {
            std::size_t ie = i;
            std::size_t je = j;
            while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) {
                ++ie;
            }
            while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) {
                ++je;
            }
            // Compare digit runs by value: strip leading zeros, then length, then lexically.
            std::size_t is = i;
            std::size_t js = j;
            while (is + 1 < ie && a[is] == '0') {
                ++is;
            }
            while (js + 1 < je && b[js] == '0') {
                ++js;
            }
            const std::string_view ra(a.data() + is, ie - is);
            const std::string_view rb(b.data() + js, je - js);
            if (ra.size() != rb.size()) {
                return ra.size() < rb.size();
            }
            if (ra != rb) {
                return ra < rb;
            }
            i = ie;
            j = je;
        } else {
            if (a[i] != b[j]) {
                return a[i] < b[j];
            }
            ++i;
            ++j;
        }
    }
    if (a.size() - i != b.size() - j) {
        return a.size() - i < b.size() - j;
    }
    return a < b;
}

std::vector<FilterDecision> decide_filter(std::vector<FilterDecision> decisions, double threshold)
{
    const FilterDecision* best = nullptr;
    for (auto& d : decisions) {
        d.selected = false;
        d.kept = !d.undetermined && d.confidence && *d.confidence > threshold;
    }
    for (const auto& d : decisions) {
        if (!d.kept) {
            continue;
        }
        if (best == nullptr || *d.confidence > *best->confidence ||
            (*d.confidence == *best->confidence && natural_less(d.image_id, best->image_id))) {
            best = &d;
        }
    }
    const std::string selected_id = best != nullptr ? best->image_id : std::string{};
    for (auto& d : decisions) {
        d.selected = best != nullptr && d.kept && d.image_id == selected_id;
    }
    std::stable_sort(decisions.begin(), decisions.end(), [](const FilterDecision& a, const FilterDecision& b) {
        const bool ka = a.confidence.has_value() && !a.undetermined;
        const bool kb = b.confidence.has_value() && !b.undetermined;
        if (ka != kb) {
            return ka;
        }
        if (ka && *a.confidence != *b.confidence) {
            return *a.confidence > *b.confidence;
        }
        return natural_less(a.image_id, b.image_id);
    });
    return decisions;
}

std::vector<FilterDecision> filter_candidate_images(const std::string& abstract,
                                                   const std::vector<CandidateImage>& images, AgentGateway& gateway,
                                                   const AgentHandle& handle, double threshold)
{
    std::vector<FilterDecision> decisions;
    for (const auto& img : images) {
        FilterDecision d;
        d.image_id = img.id;
        try {
            AgentTask task{"dataset_filter", {{"abstract", abstract}, {"caption", img.caption}}, {load_image(img.path)},
                           [](const nlohmann::json& p) { (void)parse_filter_confidence(p); }};
            d.confidence = parse_filter_confidence(gateway.run_agent(task, handle));
        } catch (const Error& e) {
            d.undetermined = true;
            d.error = std::string(to_string(e.code())) + ": " + e.what();
        }
        decisions.push_back(std::move(d));
    }
    return decide_filter(std::move(decisions), threshold);
}

nlohmann::ordered_json to_json(const FilterDecision& d)
{
    nlohmann::ordered_json out;
    out["image_id"] = d.image_id;
    out["confidence"] = d.confidence ? nlohmann::ordered_json(*d.confidence) : nlohmann::ordered_json(nullptr);
    out["kept"] = d.kept;
    out["selected"] = d.selected;
    out["undetermined"] = d.undetermined;
    if (!d.error.empty()) {
        out["error"] = d.error;
    }
    return out;
}

}  // namespace sysarch
