#include "hive/types.hpp"

#include <stdexcept>

namespace hive {

std::string to_string(Label label) {
    switch (label) {
    case Label::normal: return "normal";
    case Label::swarm: return "swarm";
    case Label::other_anomaly: return "other_anomaly";
    case Label::unlabeled: return "unlabeled";
    }
    throw std::logic_error("unknown label value");
}

Label label_from_string(const std::string& s) {
    if (s == "normal") return Label::normal;
    if (s == "swarm") return Label::swarm;
    if (s == "other_anomaly") return Label::other_anomaly;
    if (s == "unlabeled") return Label::unlabeled;
    throw std::invalid_argument("unknown label: " + s);
}

std::string to_string(DetectorKind kind) {
    switch (kind) {
    case DetectorKind::rba: return "rba";
    case DetectorKind::lof: return "lof";
    case DetectorKind::iforest: return "iforest";
    case DetectorKind::envelope: return "envelope";
    case DetectorKind::ocsvm: return "ocsvm";
    case DetectorKind::autoencoder: return "autoencoder";
    }
    throw std::logic_error("unknown detector kind value");
}

DetectorKind detector_kind_from_string(const std::string& s) {
    if (s == "rba") return DetectorKind::rba;
    if (s == "lof") return DetectorKind::lof;
    if (s == "iforest") return DetectorKind::iforest;
    if (s == "envelope") return DetectorKind::envelope;
    if (s == "ocsvm") return DetectorKind::ocsvm;
    if (s == "autoencoder") return DetectorKind::autoencoder;
    throw std::invalid_argument("unknown detector kind: " + s);
}

std::size_t SensorTrace::sensor_index(const std::string& id) const {
    for (std::size_t i = 0; i < sensor_ids.size(); ++i)
        if (sensor_ids[i] == id) return i;
    throw std::invalid_argument("unknown sensor id: " + id + " in source " + source);
}

} // namespace hive
