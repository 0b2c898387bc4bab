#ifndef GFB_REPORT_HPP
#define GFB_REPORT_HPP

// JSON encodings of training history and evaluation metrics. Metrics files
// are JSON lines: one object per epoch, then one summary object.

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gfb/train.hpp"

namespace gfb {

inline nlohmann::ordered_json epoch_json(const EpochRecord& r, bool with_timing = true) {
    return {{"epoch", r.epoch},
            {"train_loss", r.train_loss},
            {"val_loss", r.val_loss},
            {"val_acc", r.val_acc},
            {"seconds", with_timing ? r.seconds : 0.0}};
}

/// Stable keys: accuracy, macro_precision, macro_recall, macro_f1, count,
/// per_class[{class, precision, recall, f1, support, predicted}].
inline nlohmann::ordered_json metrics_json(const Metrics& m, const std::vector<std::string>& class_names) {
    nlohmann::ordered_json per = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < m.per_class.size(); ++c) {
        const auto& pc = m.per_class[c];
        per.push_back({{"class", c < class_names.size() ? class_names[c] : std::to_string(c)},
                       {"precision", pc.precision},
                       {"recall", pc.recall},
                       {"f1", pc.f1},
                       {"support", pc.support},
                       {"predicted", pc.predicted}});
    }
    return {{"accuracy", m.accuracy},
            {"macro_precision", m.macro_precision},
            {"macro_recall", m.macro_recall},
            {"macro_f1", m.macro_f1},
            {"count", m.count},
            {"per_class", per}};
}

inline nlohmann::ordered_json summary_json(const TrainHistory& h, const Metrics& test,
                                           const std::vector<std::string>& class_names) {
    return {{"summary", true},
            {"stop_epoch", h.stop_epoch},
            {"best_epoch", h.best_epoch},
            {"best_val_loss", h.best_val_loss},
            {"test", metrics_json(test, class_names)}};
}

inline void write_metrics_jsonl(std::ostream& out, const TrainHistory& h, const Metrics& test,
                                const std::vector<std::string>& class_names, bool with_timing = true) {
    for (const auto& r : h.records) out << epoch_json(r, with_timing).dump() << '\n';
    out << summary_json(h, test, class_names).dump() << '\n';
}

} // namespace gfb

#endif // GFB_REPORT_HPP
