#include "dreaminsert/compositor.hpp"

#include "dreaminsert/errors.hpp"

namespace dreaminsert {

void validate_asset(const ObjectAsset& asset) {
  if (asset.image.size() != asset.mask.size()) {
    throw ValidationError("object asset: image and mask dimensions differ");
  }
  if (asset.mask.none()) throw ValidationError("object asset: mask is empty");
}

Frame extract_object(const ObjectAsset& asset) {
  if (asset.image.size() != asset.mask.size()) {
    throw ValidationError("extract_object: image and mask dimensions differ");
  }
  Frame out(asset.image.width(), asset.image.height());
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x)
      if (asset.mask.at(x, y))
        for (int c = 0; c < Frame::kChannels; ++c) out.at(x, y, c) = asset.image.at(x, y, c);
  return out;
}

Frame object_reference(const ObjectAsset& asset) {
  validate_asset(asset);
  return crop(extract_object(asset), asset.mask.support());
}

PasteResult paste(const Frame& obj, const BinaryMask& obj_mask, const Frame& background,
                  const BBox& box) {
  if (obj.size() != obj_mask.size()) throw ValidationError("paste: object and mask dimensions differ");
  if (!box.fits(background.size())) throw ValidationError("paste: box out of frame");
  if (obj_mask.none()) throw ValidationError("paste: object mask is empty");

  PasteResult r{background, merge_mask(obj_mask, box, background.size())};
  if (r.merged.none()) {
    throw ValidationError("paste: object mask vanished after resizing to the box");
  }

  const Frame resized = resize_bilinear(crop(obj, obj_mask.support()), box.w, box.h);
  for (int y = 0; y < box.h; ++y) {
    for (int x = 0; x < box.w; ++x) {
      if (!r.merged.at(box.x0 + x, box.y0 + y)) continue;
      for (int c = 0; c < Frame::kChannels; ++c) r.frame.at(box.x0 + x, box.y0 + y, c) = resized.at(x, y, c);
    }
  }
  return r;
}

CopySequence make_copy_sequence(const ObjectAsset& asset, const Clip& background,
                                const TrajectorySequence& traj) {
  validate_asset(asset);
  validate_clip(background);
  if (traj.boxes.empty()) throw ValidationError("make_copy_sequence: empty trajectory");
  if (traj.size() != background.size()) {
    throw ValidationError("make_copy_sequence: trajectory has " + std::to_string(traj.size()) +
                          " boxes but the clip has " + std::to_string(background.size()) + " frames");
  }
  if (traj.frame != background.frame_size()) {
    throw ValidationError("make_copy_sequence: trajectory frame size differs from the clip");
  }
  validate_trajectory(traj);

  const Frame obj = extract_object(asset);
  CopySequence seq;
  seq.clip.fps = background.fps;
  seq.clip.frames.reserve(background.size());
  seq.partitions.reserve(background.size());
  for (std::size_t i = 0; i < background.size(); ++i) {
    auto pasted = paste(obj, asset.mask, background.frames[i], traj.boxes[i]);
    seq.partitions.push_back(partition(pasted.merged, rasterize(traj.boxes[i], traj.frame)));
    seq.clip.frames.push_back(std::move(pasted.frame));
  }
  return seq;
}

}  // namespace dreaminsert
