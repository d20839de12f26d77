export {
  ConfigError,
  DimensionError,
  FormatError,
  WeightsUnavailableError,
} from "./errors.js";
export { decodeY4m, type Video } from "./y4m.js";
export {
  defaultClipSpec,
  sliceClips,
  type Clip,
  type ClipSpec,
  type Roi,
} from "./clips.js";
export {
  defaultWeights,
  knownBackbones,
  loadBackbone,
  nativeDim,
  SEEDED_PROJECTION,
  SEEDED_PROJECTION_DIM,
  type Backbone,
  type BackboneChoice,
} from "./backbone.js";
export {
  appendManifestEntry,
  decodeFeatures,
  encodeFeatures,
  LABEL_ID,
  LABEL_OOD,
  LABEL_UNLABELED,
  readFeatures,
  writeFeatures,
  type FeatureBlock,
  type ManifestEntry,
} from "./features.js";
export { extractFeatures } from "./extract.js";
export { main } from "./cli.js";
