#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>

#include "vinevi/forward.hpp"
#include "vinevi/model.hpp"
#include "vinevi/pcap.hpp"
#include "vinevi/traffic_class.hpp"
#include "vinevi/vision.hpp"

namespace vinevi::cls {

enum class ResultSource { model, heuristic };

struct ClassificationResult {
  TrafficClass cls = TrafficClass::browsing;
  double confidence = 0.0;
  std::chrono::nanoseconds latency{0};
  ResultSource source = ResultSource::heuristic;
};

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual ClassificationResult classify(const pcap::RawPacket& pkt) = 0;
  virtual std::string name() const = 0;
};

// Neural path: packet -> image -> normalized tensor -> forward pass.
// The model must label exactly the seven traffic classes (any order);
// anything else is a LabelMismatch at construction.
class ModelClassifier final : public Classifier {
 public:
  explicit ModelClassifier(nn::Model model, vision::TransformConfig cfg = {});

  ClassificationResult classify(const pcap::RawPacket& pkt) override;
  std::string name() const override { return model_.name; }
  const nn::Model& model() const { return model_; }

 private:
  nn::Model model_;
  vision::TransformConfig cfg_;
  std::array<TrafficClass, kTrafficClassCount> class_for_index_{};
};

// Port-table baseline. Deterministic and total: every packet maps to a
// class, defaulting to browsing at half confidence.
class HeuristicClassifier final : public Classifier {
 public:
  explicit HeuristicClassifier(uint32_t link_type) : link_type_(link_type) {}

  ClassificationResult classify(const pcap::RawPacket& pkt) override;
  std::string name() const override { return "heuristic"; }

 private:
  uint32_t link_type_;
};

// The port table itself, checked src-then-dst by the heuristic.
std::optional<TrafficClass> class_for_port(uint16_t port, uint8_t ip_proto);

ClassificationResult classify_heuristic(const pcap::RawPacket& pkt, uint32_t link_type);

}  // namespace vinevi::cls
