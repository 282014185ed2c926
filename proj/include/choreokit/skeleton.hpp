#pragma once

#include <array>
#include <cstddef>
#include <utility>

namespace choreokit {

// COCO-18 body layout, in the order emitted by OpenPose.
enum class Joint : std::size_t {
  kNose = 0,
  kNeck,
  kRightShoulder,
  kRightElbow,
  kRightWrist,
  kLeftShoulder,
  kLeftElbow,
  kLeftWrist,
  kRightHip,
  kRightKnee,
  kRightAnkle,
  kLeftHip,
  kLeftKnee,
  kLeftAnkle,
  kRightEye,
  kLeftEye,
  kRightEar,
  kLeftEar,
};

inline constexpr std::size_t kNumJoints = 18;

constexpr std::size_t index(Joint j) { return static_cast<std::size_t>(j); }

// The 17 limbs of the COCO-18 skeleton (a spanning tree rooted at the neck).
inline constexpr std::array<std::pair<Joint, Joint>, 17> kSkeletonEdges{{
    {Joint::kNeck, Joint::kRightShoulder},
    {Joint::kNeck, Joint::kLeftShoulder},
    {Joint::kRightShoulder, Joint::kRightElbow},
    {Joint::kRightElbow, Joint::kRightWrist},
    {Joint::kLeftShoulder, Joint::kLeftElbow},
    {Joint::kLeftElbow, Joint::kLeftWrist},
    {Joint::kNeck, Joint::kRightHip},
    {Joint::kRightHip, Joint::kRightKnee},
    {Joint::kRightKnee, Joint::kRightAnkle},
    {Joint::kNeck, Joint::kLeftHip},
    {Joint::kLeftHip, Joint::kLeftKnee},
    {Joint::kLeftKnee, Joint::kLeftAnkle},
    {Joint::kNeck, Joint::kNose},
    {Joint::kNose, Joint::kRightEye},
    {Joint::kRightEye, Joint::kRightEar},
    {Joint::kNose, Joint::kLeftEye},
    {Joint::kLeftEye, Joint::kLeftEar},
}};

enum class BodyPart { kHand, kFoot };

// No finger or toe joints in COCO-18: wrists stand in for hands and ankles
// for feet.
inline constexpr std::array<Joint, 2> part_joints(BodyPart part) {
  if (part == BodyPart::kHand) return {Joint::kLeftWrist, Joint::kRightWrist};
  return {Joint::kLeftAnkle, Joint::kRightAnkle};
}

inline constexpr std::array<Joint, 4> kExtremityJoints{
    Joint::kLeftWrist, Joint::kRightWrist, Joint::kLeftAnkle, Joint::kRightAnkle};

inline constexpr bool is_extremity(std::size_t joint) {
  for (Joint j : kExtremityJoints)
    if (index(j) == joint) return true;
  return false;
}

}  // namespace choreokit
