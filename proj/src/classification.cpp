#include "vinevi/classification.hpp"

#include <algorithm>

namespace vinevi::cls {

namespace {
constexpr uint8_t kTcp = 6;
constexpr uint8_t kUdp = 17;
}  // namespace

std::optional<TrafficClass> class_for_port(uint16_t port, uint8_t ip_proto) {
  if (ip_proto != kTcp && ip_proto != kUdp) return std::nullopt;
  switch (port) {
    case 53: return TrafficClass::dns;
    case 22: return TrafficClass::ssh;
    case 3389: return TrafficClass::rdp;
    case 5060:
    case 5061: return TrafficClass::voip;
    case 80:
    case 443:
    case 8080: return TrafficClass::browsing;
    case 1883:
    case 8883:
    case 5683: return TrafficClass::iot;
    default: break;
  }
  if (port >= 6881 && port <= 6889) return TrafficClass::bittorrent;
  if (ip_proto == kUdp && port >= 16384 && port <= 32767)
    return TrafficClass::voip;  // RTP range
  return std::nullopt;
}

ClassificationResult classify_heuristic(const pcap::RawPacket& pkt, uint32_t link_type) {
  const auto t0 = std::chrono::steady_clock::now();

  ClassificationResult res;
  res.source = ResultSource::heuristic;
  res.cls = TrafficClass::browsing;  // documented default
  res.confidence = 0.5;

  if (auto key = pcap::extract_flow_key(pkt, link_type)) {
    std::optional<TrafficClass> hit;
    if (key->src_port) hit = class_for_port(*key->src_port, key->ip_proto);
    if (!hit && key->dst_port) hit = class_for_port(*key->dst_port, key->ip_proto);
    if (hit) {
      res.cls = *hit;
      res.confidence = 1.0;
    }
  }

  res.latency = std::chrono::steady_clock::now() - t0;
  return res;
}

ClassificationResult HeuristicClassifier::classify(const pcap::RawPacket& pkt) {
  return classify_heuristic(pkt, link_type_);
}

ModelClassifier::ModelClassifier(nn::Model model, vision::TransformConfig cfg)
    : model_(std::move(model)), cfg_(cfg) {
  if (model_.class_labels.size() != kTrafficClassCount)
    throw LabelMismatch("model declares " + std::to_string(model_.class_labels.size()) +
                        " labels, the agent needs the 7 traffic classes");
  std::array<bool, kTrafficClassCount> seen{};
  for (size_t i = 0; i < model_.class_labels.size(); ++i) {
    const auto cls = traffic_class_from_name(model_.class_labels[i]);
    if (!cls || seen[int(*cls)])
      throw LabelMismatch("model label \"" + model_.class_labels[i] +
                          "\" is not a distinct traffic class name");
    seen[int(*cls)] = true;
    class_for_index_[i] = *cls;
  }
}

ClassificationResult ModelClassifier::classify(const pcap::RawPacket& pkt) {
  const auto t0 = std::chrono::steady_clock::now();

  const vision::PacketImage img = vision::packet_to_image(pkt.bytes, cfg_);
  const Tensor3 tensor = vision::normalize(img, model_.norm_mean, model_.norm_std);
  const nn::ClassScores scores = nn::forward(model_, tensor);
  const nn::Prediction best = nn::argmax_class(scores, model_.class_labels);

  ClassificationResult res;
  res.source = ResultSource::model;
  res.cls = class_for_index_[size_t(best.index)];
  res.confidence = scores[size_t(best.index)];
  res.latency = std::chrono::steady_clock::now() - t0;
  return res;
}

}  // namespace vinevi::cls
