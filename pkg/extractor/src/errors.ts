/** Invalid option values, unknown names, and bad argument combinations. */
export class ConfigError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ConfigError";
  }
}

/** Shape disagreements between declared and actual feature dimensions. */
export class DimensionError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "DimensionError";
  }
}

/** Malformed video streams or feature files. */
export class FormatError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "FormatError";
  }
}

/** A pretrained backbone was requested but its frozen weights cannot be
 * obtained in this environment. */
export class WeightsUnavailableError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "WeightsUnavailableError";
  }
}
