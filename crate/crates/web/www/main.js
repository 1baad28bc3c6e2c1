import init, { solve, theta_pmf, coupled_quantiles, harmonic_tree } from "./pkg/stablegw_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function frame(canvas) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(40.5, 10.5, canvas.width - 50, canvas.height - 40);
  return ctx;
}

// maps data coordinates into the plot box
function scales(canvas, [x0, x1], [y0, y1]) {
  const w = canvas.width - 50, h = canvas.height - 40;
  return [(x) => 40 + ((x - x0) / (x1 - x0)) * w, (y) => 10 + h - ((y - y0) / (y1 - y0)) * h];
}

function report(id, f) {
  try {
    $(id).classList.remove("err");
    f();
  } catch (e) {
    $(id).classList.add("err");
    $(id).textContent = String(e.message ?? e);
  }
}

function runSolve() {
  report("g-out", () => {
    const r = JSON.parse(solve(num("g-alpha"), num("g-pool"), BigInt(num("g-seed")), 80, 50));
    const c = $("g-plot"), ctx = frame(c);
    const [sx, sy] = scales(c, [0, Math.log(50)], [0, 1]);
    // empirical tail against the fitted shape D/t + 1 − D, log t on the x axis
    ctx.strokeStyle = "#1f5fa8";
    ctx.beginPath();
    r.tail.forEach(([t, p], i) => (i ? ctx.lineTo : ctx.moveTo).call(ctx, sx(Math.log(t)), sy(p)));
    ctx.stroke();
    ctx.strokeStyle = "#c33";
    ctx.setLineDash([4, 4]);
    ctx.beginPath();
    for (let i = 0; i <= 40; i++) {
      const t = 1 + i / 40;
      (i ? ctx.lineTo : ctx.moveTo).call(ctx, sx(Math.log(t)), sy(r.d / t + 1 - r.d));
    }
    ctx.stroke();
    ctx.setLineDash([]);
    ctx.fillStyle = "#222";
    ctx.fillText("P(C ≥ t) against log t; dashed: shape fit on [1, 2]", 50, 25);
    $("g-out").textContent =
      `iterations ${r.iterations} (${r.stop_rule}), mean ${r.mean.toFixed(4)}, max ${r.max.toFixed(1)}\n` +
      `shape D = ${r.d.toFixed(4)}, sup error ${r.sup_err.toExponential(2)}\n` +
      `β ≈ ${r.beta.toFixed(4)}  [${r.beta_ci[0].toFixed(4)}, ${r.beta_ci[1].toFixed(4)}]`;
  });
}

function runTheta() {
  report("t-out", () => {
    const a = num("t-alpha"), b = num("t-alpha2"), kmax = 30;
    const pa = theta_pmf(a, kmax), pb = theta_pmf(b, kmax);
    const c = $("t-plot"), ctx = frame(c);
    const [sx, sy] = scales(c, [0, kmax + 1], [-8, 0]);
    const bars = (p, colour, dx) => {
      ctx.fillStyle = colour;
      for (let k = 2; k <= kmax; k++) {
        const y = sy(Math.max(Math.log10(p[k]), -8));
        ctx.fillRect(sx(k) + dx, y, 6, sy(-8) - y);
      }
    };
    bars(pa, "#1f5fa8", -6);
    bars(pb, "#c33", 0);
    ctx.fillStyle = "#222";
    ctx.fillText(`log10 θ(k), k = 2..${kmax}: blue α = ${a}, red α′ = ${b}`, 50, 25);
    const n = 10000;
    const q = coupled_quantiles(new Float64Array([a, b]), n);
    let ordered = 0, equal = 0, sa = 0, sb = 0;
    for (let i = 0; i < n; i++) {
      const [ka, kb] = [q[2 * i], q[2 * i + 1]];
      sa += ka;
      sb += kb;
      if (ka === kb) equal++;
      if ((a <= b && ka >= kb) || (a > b && ka <= kb)) ordered++;
    }
    $("t-out").textContent =
      `coupled quantiles at ${n} grid points: ordered in ${ordered}/${n}, equal in ${equal}\n` +
      `grid means ${(sa / n).toFixed(3)} and ${(sb / n).toFixed(3)} (heavy tails truncated by the grid)`;
  });
}

function runTree() {
  report("h-out", () => {
    const r = JSON.parse(harmonic_tree(num("h-alpha"), num("h-n"), BigInt(num("h-seed"))));
    const nodes = r.nodes.map(([parent, gen, mu]) => ({ parent, gen, mu }));
    // lay out each vertex over the span of harmonic mass below it
    const start = new Array(nodes.length).fill(0);
    const used = new Array(nodes.length).fill(0);
    for (let v = 1; v < nodes.length; v++) {
      const p = nodes[v].parent;
      start[v] = start[p] + used[p];
      used[p] += nodes[v].mu;
    }
    const c = $("h-plot"), ctx = frame(c);
    const [sx, sy] = scales(c, [0, 1], [r.n, 0]);
    ctx.lineWidth = 1;
    for (let v = 1; v < nodes.length; v++) {
      const p = nodes[v].parent;
      ctx.strokeStyle = `rgba(31, 95, 168, ${0.25 + 0.75 * Math.sqrt(nodes[v].mu / nodes[p].mu)})`;
      ctx.beginPath();
      ctx.moveTo(sx(start[p] + nodes[p].mu / 2), sy(nodes[p].gen));
      ctx.lineTo(sx(start[v] + nodes[v].mu / 2), sy(nodes[v].gen));
      ctx.stroke();
    }
    ctx.fillStyle = "#c33";
    nodes.forEach((v, i) => {
      if (v.gen === r.n) ctx.fillRect(sx(start[i]), sy(r.n) - 1, Math.max(1, sx(start[i] + v.mu) - sx(start[i])), 6);
    });
    const leaves = nodes.filter((v) => v.gen === r.n).length;
    $("h-out").textContent =
      `${nodes.length} vertices reach level ${r.n} (${r.full_size} in the sampled tree, ${r.attempts} attempts)\n` +
      `${leaves} vertices on level n; entropy of harmonic measure ${r.entropy.toFixed(4)} vs log(#level) ${Math.log(leaves).toFixed(4)}\n` +
      `conductance to level n ${r.conductance.toFixed(6)}`;
  });
}

await init();
$("g-run").onclick = runSolve;
$("t-run").onclick = runTheta;
$("h-run").onclick = runTree;
runTheta();
runTree();
