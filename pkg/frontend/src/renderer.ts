// Raw WebGL point-sprite pipeline. One gl.POINTS draw over planar
// attribute buffers; the fragment stage rotates the sprite by the
// point's orientation and samples the glyph atlas tile for its shape.

import type { SceneData } from "./format.js";
import type { Mat4 } from "./math3d.js";
import { buildAtlas, GLYPH_COUNT, TILE_SIZE } from "./glyphs.js";

const VERTEX_SRC = `
attribute vec3 aPosition;
attribute vec4 aColor;
attribute float aSize;
attribute float aShape;
attribute float aOrientation;
uniform mat4 uViewProj;
uniform float uPointScale;
varying vec4 vColor;
varying float vShape;
varying float vOrientation;
void main() {
  vec4 clip = uViewProj * vec4(aPosition, 1.0);
  gl_Position = clip;
  float px = uPointScale * aSize / max(clip.w, 0.001);
  gl_PointSize = clamp(px, 1.0, 64.0);
  vColor = aColor;
  vShape = aShape;
  vOrientation = aOrientation;
}
`;

const FRAGMENT_SRC = `
precision mediump float;
varying vec4 vColor;
varying float vShape;
varying float vOrientation;
uniform sampler2D uAtlas;
void main() {
  vec2 pc = gl_PointCoord * 2.0 - 1.0;
  float c = cos(vOrientation);
  float s = sin(vOrientation);
  vec2 r = vec2(c * pc.x - s * pc.y, s * pc.x + c * pc.y);
  vec2 uv = (r + 1.0) * 0.5;
  if (uv.x < 0.0 || uv.x > 1.0 || uv.y < 0.0 || uv.y > 1.0) discard;
  float tile = (floor(vShape + 0.5) + uv.x) / ${GLYPH_COUNT}.0;
  float mask = texture2D(uAtlas, vec2(tile, uv.y)).r;
  if (mask < 0.5) discard;
  gl_FragColor = vColor;
}
`;

function compile(gl: WebGLRenderingContext, kind: number, src: string): WebGLShader {
  const shader = gl.createShader(kind);
  if (shader === null) {
    throw new Error("could not create shader");
  }
  gl.shaderSource(shader, src);
  gl.compileShader(shader);
  if (!gl.getShaderParameter(shader, gl.COMPILE_STATUS)) {
    throw new Error(`shader compile failed: ${gl.getShaderInfoLog(shader)}`);
  }
  return shader;
}

function link(gl: WebGLRenderingContext, vs: WebGLShader, fs: WebGLShader): WebGLProgram {
  const program = gl.createProgram();
  if (program === null) {
    throw new Error("could not create program");
  }
  gl.attachShader(program, vs);
  gl.attachShader(program, fs);
  gl.linkProgram(program);
  if (!gl.getProgramParameter(program, gl.LINK_STATUS)) {
    throw new Error(`program link failed: ${gl.getProgramInfoLog(program)}`);
  }
  return program;
}

export class PointRenderer {
  private readonly gl: WebGLRenderingContext;
  private readonly program: WebGLProgram;
  private readonly buffers: Record<string, WebGLBuffer> = {};
  private readonly uViewProj: WebGLUniformLocation;
  private readonly uPointScale: WebGLUniformLocation;
  private count = 0;

  constructor(gl: WebGLRenderingContext) {
    this.gl = gl;
    this.program = link(
      gl,
      compile(gl, gl.VERTEX_SHADER, VERTEX_SRC),
      compile(gl, gl.FRAGMENT_SHADER, FRAGMENT_SRC),
    );
    gl.useProgram(this.program);
    this.uViewProj = this.uniform("uViewProj");
    this.uPointScale = this.uniform("uPointScale");

    const atlas = gl.createTexture();
    gl.bindTexture(gl.TEXTURE_2D, atlas);
    gl.texImage2D(
      gl.TEXTURE_2D,
      0,
      gl.LUMINANCE,
      GLYPH_COUNT * TILE_SIZE,
      TILE_SIZE,
      0,
      gl.LUMINANCE,
      gl.UNSIGNED_BYTE,
      buildAtlas(),
    );
    gl.texParameteri(gl.TEXTURE_2D, gl.TEXTURE_MIN_FILTER, gl.LINEAR);
    gl.texParameteri(gl.TEXTURE_2D, gl.TEXTURE_MAG_FILTER, gl.LINEAR);
    gl.texParameteri(gl.TEXTURE_2D, gl.TEXTURE_WRAP_S, gl.CLAMP_TO_EDGE);
    gl.texParameteri(gl.TEXTURE_2D, gl.TEXTURE_WRAP_T, gl.CLAMP_TO_EDGE);
    gl.uniform1i(this.uniform("uAtlas"), 0);

    gl.enable(gl.BLEND);
    gl.blendFunc(gl.SRC_ALPHA, gl.ONE_MINUS_SRC_ALPHA);
    gl.enable(gl.DEPTH_TEST);
    gl.clearColor(0.04, 0.05, 0.08, 1.0);
  }

  private uniform(name: string): WebGLUniformLocation {
    const loc = this.gl.getUniformLocation(this.program, name);
    if (loc === null) {
      throw new Error(`missing uniform ${name}`);
    }
    return loc;
  }

  private upload(name: string, data: ArrayBufferView): void {
    const gl = this.gl;
    let buf = this.buffers[name];
    if (buf === undefined) {
      const created = gl.createBuffer();
      if (created === null) {
        throw new Error("could not create buffer");
      }
      buf = this.buffers[name] = created;
    }
    gl.bindBuffer(gl.ARRAY_BUFFER, buf);
    gl.bufferData(gl.ARRAY_BUFFER, data, gl.STATIC_DRAW);
  }

  setScene(scene: SceneData): void {
    this.upload("aPosition", scene.position);
    this.upload("aColor", scene.rgba);
    this.upload("aSize", scene.size);
    this.upload("aShape", scene.shapeId);
    this.upload("aOrientation", scene.orientation);
    this.count = scene.count;
  }

  private bindAttr(name: string, size: number, type: number, normalize: boolean): void {
    const gl = this.gl;
    const loc = gl.getAttribLocation(this.program, name);
    if (loc < 0) {
      throw new Error(`missing attribute ${name}`);
    }
    gl.bindBuffer(gl.ARRAY_BUFFER, this.buffers[name]);
    gl.enableVertexAttribArray(loc);
    gl.vertexAttribPointer(loc, size, type, normalize, 0, 0);
  }

  draw(viewProj: Mat4, width: number, height: number): void {
    const gl = this.gl;
    gl.viewport(0, 0, width, height);
    gl.clear(gl.COLOR_BUFFER_BIT | gl.DEPTH_BUFFER_BIT);
    if (this.count === 0) {
      return;
    }
    gl.useProgram(this.program);
    gl.uniformMatrix4fv(this.uViewProj, false, viewProj);
    gl.uniform1f(this.uPointScale, height * 0.05);
    this.bindAttr("aPosition", 3, gl.FLOAT, false);
    this.bindAttr("aColor", 4, gl.UNSIGNED_BYTE, true);
    this.bindAttr("aSize", 1, gl.FLOAT, false);
    this.bindAttr("aShape", 1, gl.UNSIGNED_BYTE, false);
    this.bindAttr("aOrientation", 1, gl.FLOAT, false);
    gl.drawArrays(gl.POINTS, 0, this.count);
  }
}
