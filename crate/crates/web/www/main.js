// Built with: wasm-pack build crates/web --target web --out-dir www/pkg
import init, { gaussian_map, steering_map, state_summary } from "./pkg/steerscan_web.js";

const canvas = document.getElementById("map");
const ctx = canvas.getContext("2d");
const info = document.getElementById("info");
const $ = (id) => document.getElementById(id);
let current = null;

function colour(margin, entangled) {
  if (margin === null) return "#d33";
  if (!entangled) return "#ccc";
  if (margin > 0) return `rgb(40, 90, ${Math.min(255, 150 + 400 * margin)})`;
  return "#f3efe0";
}

function draw(map) {
  current = map;
  const n = map.gammas.length;
  const w = canvas.width / n, h = canvas.height / map.mus.length;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < map.mus.length; j++) {
      ctx.fillStyle = colour(map.margins[i][j], map.entangled[i][j]);
      ctx.fillRect(i * w, canvas.height - (j + 1) * h, Math.ceil(w), Math.ceil(h));
    }
  }
  // Cell centres map linearly onto the axis values.
  const [g0, g1] = [map.gammas[0], map.gammas[n - 1]];
  const [m0, m1] = [map.mus[0], map.mus[map.mus.length - 1]];
  const px = (g) => w / 2 + ((g - g0) / (g1 - g0)) * (canvas.width - w);
  const py = (m) => canvas.height - h / 2 - ((m - m0) / (m1 - m0)) * (canvas.height - h);
  ctx.strokeStyle = "#000";
  ctx.lineWidth = 2;
  for (const line of map.contours) {
    ctx.beginPath();
    line.points.forEach((p, k) => (k ? ctx.lineTo(px(p[0]), py(p[1])) : ctx.moveTo(px(p[0]), py(p[1]))));
    ctx.stroke();
  }
}

function show(fn) {
  try {
    return fn();
  } catch (e) {
    info.textContent = "error: " + (e.message || e);
    return null;
  }
}

function gaussian() {
  const alpha = parseFloat($("alpha").value);
  $("alpha-val").textContent = alpha.toFixed(2);
  const map = show(() => JSON.parse(gaussian_map(alpha, parseInt($("grid").value))));
  if (map) {
    draw(map);
    info.textContent = `gaussian map, alpha = ${alpha}\nclick the map for a state summary`;
  }
}

function fock() {
  info.textContent = "computing...";
  setTimeout(() => {
    const alpha = parseFloat($("alpha").value);
    const map = show(() =>
      JSON.parse(steering_map(alpha, $("criterion").value, parseInt($("fgrid").value), parseInt($("cutoff").value))),
    );
    if (map) {
      draw(map);
      info.textContent = `${map.criterion}, alpha = ${alpha}\nflagged (truncation) cells: ${map.flagged}`;
    }
  }, 10);
}

canvas.addEventListener("click", (ev) => {
  if (!current) return;
  const r = canvas.getBoundingClientRect();
  const i = Math.min(current.gammas.length - 1, Math.floor(((ev.clientX - r.left) / r.width) * current.gammas.length));
  const j = Math.min(current.mus.length - 1, Math.floor(((r.bottom - ev.clientY) / r.height) * current.mus.length));
  const s = show(() => JSON.parse(state_summary(current.gammas[i], current.mus[j], current.alpha)));
  if (!s) return;
  const f = (x) => x.toFixed(6).padStart(11);
  info.textContent = [
    `gamma = ${s.gamma.toFixed(4)}  mu = ${s.mu.toFixed(4)}  alpha = ${s.alpha}`,
    "output covariance matrix",
    ...s.cm.map((row) => row.map(f).join(" ")),
    `standard form (p, m, n, u) = ${s.standard_form.map((x) => x.toFixed(5)).join(", ")}`,
    `purity             ${s.purity.toFixed(6)}`,
    `entangled          ${s.entangled} (PPT eigenvalue ${s.ppt_eigenvalue.toFixed(6)})`,
    `gaussian steering  ${s.gaussian_steerable} (margin ${s.gaussian_margin.toExponential(4)})`,
    `threshold variance ${s.threshold_variance.toFixed(6)}`,
    `boundary gamma     ${s.boundary_gamma === null ? "none" : s.boundary_gamma.toFixed(6)}`,
    `map margin here    ${current.margins[i][j]}`,
  ].join("\n");
});

await init();
$("alpha").addEventListener("input", gaussian);
$("grid").addEventListener("change", gaussian);
$("run").addEventListener("click", fock);
gaussian();
