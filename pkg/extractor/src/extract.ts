/** Clip embedding: run a frozen backbone over clips and collect the
 * vectors into a writable feature block. */

import { loadBackbone, type BackboneChoice } from "./backbone.js";
import type { Clip } from "./clips.js";
import { DimensionError } from "./errors.js";
import type { FeatureBlock } from "./features.js";

/** Embed every clip with the chosen backbone. Zero clips give an empty
 * block of the declared dimension. Deterministic: the backbones are frozen
 * and take no random input. */
export function extractFeatures(clips: Clip[], choice: BackboneChoice): FeatureBlock {
  const backbone = loadBackbone(choice);
  if (backbone.outputDim !== choice.outputDim) {
    throw new DimensionError(
      `backbone ${choice.name} produces ${backbone.outputDim}-dimensional ` +
        `features, but the choice declares ${choice.outputDim}`,
    );
  }
  const dim = choice.outputDim;
  const data = new Float32Array(clips.length * dim);
  clips.forEach((clip, i) => {
    const vector = backbone.embed(clip);
    if (vector.length !== dim) {
      throw new DimensionError(
        `backbone ${choice.name} returned ${vector.length} values for clip ${i}, expected ${dim}`,
      );
    }
    data.set(vector, i * dim);
  });
  return { count: clips.length, dim, data };
}
