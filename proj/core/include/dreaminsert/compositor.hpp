#pragma once

#include <vector>

#include "dreaminsert/geometry.hpp"
#include "dreaminsert/image.hpp"

namespace dreaminsert {

/// Object image plus its segmentation mask, same dimensions.
struct ObjectAsset {
  Frame image;
  BinaryMask mask;
};

void validate_asset(const ObjectAsset& asset);

/// image ⊙ mask: zero outside the mask, source pixels inside.
Frame extract_object(const ObjectAsset& asset);

/// The extracted object cropped to the mask support. Used as the reference
/// image for box-region fidelity scoring.
Frame object_reference(const ObjectAsset& asset);

struct PasteResult {
  Frame frame;        // composited frame
  BinaryMask merged;  // frame-sized merged mask
};

/// Crops `obj` (an extracted object) to the support of `obj_mask`, resizes the
/// crop to the box (bilinear for pixels, nearest for the mask) and hard-pastes
/// it. Pixels outside the merged mask are copied from `background` verbatim.
PasteResult paste(const Frame& obj, const BinaryMask& obj_mask, const Frame& background,
                  const BBox& box);

struct CopySequence {
  Clip clip;
  std::vector<RegionPartition> partitions;
};

/// Pastes the object along the trajectory into every background frame.
CopySequence make_copy_sequence(const ObjectAsset& asset, const Clip& background,
                                const TrajectorySequence& traj);

}  // namespace dreaminsert
