import init, { Workbench, rasterize_polygon } from './pkg/segbench_wasm.js';

const ZOOM = 4;
const PLANES = ['axial', 'sagittal', 'coronal'];
const $ = (id) => document.getElementById(id);

let bench = null;
const panes = {};

function screenToPixel(canvas, event, width, height) {
  const rect = canvas.getBoundingClientRect();
  const u = Math.floor((event.clientX - rect.left) / ZOOM);
  const v = Math.floor((event.clientY - rect.top) / ZOOM);
  return [Math.min(Math.max(u, 0), width - 1), Math.min(Math.max(v, 0), height - 1)];
}

function draw(plane) {
  const p = panes[plane];
  const rgba = bench.slice_rgba(plane, p.index, +$('window').value, +$('level').value);
  const img = new ImageData(new Uint8ClampedArray(rgba), p.width, p.height);
  p.scratch.getContext('2d').putImageData(img, 0, 0);
  const ctx = p.canvas.getContext('2d');
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(p.scratch, 0, 0, p.canvas.width, p.canvas.height);
}

function drawAll() {
  PLANES.forEach(draw);
  $('seeds').textContent = `${bench.seed_count()} seed voxels`;
}

function paintAt(plane, event) {
  const p = panes[plane];
  const [u, v] = screenToPixel(p.canvas, event, p.width, p.height);
  const fg = document.querySelector('input[name=label]:checked').value === 'fg';
  bench.paint(plane, p.index, u, v, +$('radius').value, fg);
  draw(plane);
  $('seeds').textContent = `${bench.seed_count()} seed voxels`;
}

function buildPanes() {
  const host = $('panes');
  host.replaceChildren();
  for (const plane of PLANES) {
    const [width, height, extent] = bench.plane_shape(plane);
    const pane = document.createElement('div');
    pane.className = 'pane';
    const title = document.createElement('span');
    const slider = document.createElement('input');
    slider.type = 'range';
    slider.min = 0;
    slider.max = extent - 1;
    slider.value = Math.floor(extent / 2);
    const canvas = document.createElement('canvas');
    canvas.width = width * ZOOM;
    canvas.height = height * ZOOM;
    const scratch = document.createElement('canvas');
    scratch.width = width;
    scratch.height = height;
    pane.append(title, canvas, slider);
    host.append(pane);

    const p = { canvas, scratch, width, height, index: +slider.value };
    panes[plane] = p;
    const label = () => { title.textContent = `${plane} ${p.index} / ${extent - 1}`; };
    label();
    slider.addEventListener('input', () => { p.index = +slider.value; label(); draw(plane); });

    let down = false;
    canvas.addEventListener('pointerdown', (e) => { down = true; canvas.setPointerCapture(e.pointerId); paintAt(plane, e); });
    canvas.addEventListener('pointermove', (e) => { if (down) paintAt(plane, e); });
    canvas.addEventListener('pointerup', () => { down = false; });
  }
}

function load() {
  const seed = (Math.random() * 2 ** 32) >>> 0;
  bench = new Workbench($('kind').value, +$('size').value, +$('noise').value, seed);
  buildPanes();
  drawAll();
  $('result').textContent = '';
}

function segment() {
  const button = $('segment');
  button.disabled = true;
  const t0 = performance.now();
  try {
    const r = JSON.parse(bench.segment());
    const ms = performance.now() - t0;
    const hd = r.hausdorff === null ? 'n/a' : r.hausdorff.toFixed(3);
    $('result').textContent =
      `iterations ${r.iterations}${r.converged ? '' : ' (cap reached)'}  ` +
      `time ${ms.toFixed(0)} ms  voxels ${r.voxels}  DSC ${(100 * r.dice).toFixed(2)}%  HD ${hd} voxels`;
  } catch (err) {
    $('result').textContent = `error: ${err.message ?? err}`;
  }
  button.disabled = false;
  drawAll();
}

const POLY_N = 32;
const POLY_ZOOM = 12;
let vertices = [];

function drawPolygon() {
  const canvas = $('poly');
  const ctx = canvas.getContext('2d');
  ctx.fillStyle = '#000';
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  if (vertices.length >= 3) {
    const mask = rasterize_polygon(new Float64Array(vertices.flat()), POLY_N, POLY_N);
    ctx.fillStyle = '#2a7';
    let count = 0;
    mask.forEach((on, k) => {
      if (on) {
        count += 1;
        ctx.fillRect((k % POLY_N) * POLY_ZOOM, Math.floor(k / POLY_N) * POLY_ZOOM, POLY_ZOOM, POLY_ZOOM);
      }
    });
    $('poly-info').textContent = `${vertices.length} vertices, ${count} pixels inside`;
  } else {
    $('poly-info').textContent = `${vertices.length} vertices`;
  }
  ctx.fillStyle = '#555';
  for (let j = 0; j < POLY_N; j++) {
    for (let i = 0; i < POLY_N; i++) {
      ctx.fillRect(i * POLY_ZOOM + POLY_ZOOM / 2 - 1, j * POLY_ZOOM + POLY_ZOOM / 2 - 1, 2, 2);
    }
  }
  ctx.strokeStyle = '#fc3';
  ctx.beginPath();
  vertices.forEach(([x, y], i) => {
    const px = (x + 0.5) * POLY_ZOOM;
    const py = (y + 0.5) * POLY_ZOOM;
    if (i === 0) ctx.moveTo(px, py); else ctx.lineTo(px, py);
  });
  if (vertices.length >= 3) ctx.closePath();
  ctx.stroke();
}

await init();
$('load').addEventListener('click', load);
$('segment').addEventListener('click', segment);
$('clear').addEventListener('click', () => { bench.clear(); drawAll(); $('result').textContent = ''; });
$('window').addEventListener('change', drawAll);
$('level').addEventListener('change', drawAll);
$('poly').addEventListener('click', (e) => {
  const rect = e.target.getBoundingClientRect();
  // Canvas pixel k covers [k - 0.5, k + 0.5) in pixel-center coordinates.
  const x = (e.clientX - rect.left) / POLY_ZOOM - 0.5;
  const y = (e.clientY - rect.top) / POLY_ZOOM - 0.5;
  vertices.push([Math.round(x * 4) / 4, Math.round(y * 4) / 4]);
  drawPolygon();
});
$('poly-reset').addEventListener('click', () => { vertices = []; drawPolygon(); });
load();
drawPolygon();
