// Wiring: lobby -> game loop -> summary. One in-flight request per session;
// the UI re-renders from state after every server reply (no optimistic
// scoring, the server's numbers are the only numbers shown).

import { ApiError, Game, GameApi } from "./api.js";
import {
  afterCompare,
  afterTop1,
  ClientSessionState,
  newSession,
  withRound,
} from "./state.js";
import {
  checkboxForKey,
  renderCompareScreen,
  renderSummary,
  renderTop1Screen,
} from "./views.js";

interface Top1Validation {
  text: string;
  single: boolean;
  checking: boolean;
}

export class App {
  private state: ClientSessionState | null = null;
  private validation: Top1Validation = { text: "", single: false, checking: false };
  private selected: number | null = null;
  private busy = false;
  private error = "";
  private validationEpoch = 0;

  constructor(
    private readonly api: GameApi,
    private readonly mount: HTMLElement
  ) {}

  async showLobby(): Promise<void> {
    const sets = (await this.api.health()).sets;
    this.mount.replaceChildren(this.lobbyView(sets));
  }

  private lobbyView(sets: string[]): HTMLElement {
    const root = document.createElement("section");
    root.className = "screen lobby";
    root.innerHTML = `
      <h2>Next-token games</h2>
      <form class="lobby-form">
        <label>name <input name="participant" required placeholder="who is playing"></label>
        <label>game
          <select name="game">
            <option value="top1">guess the next token</option>
            <option value="compare">which one is real</option>
          </select>
        </label>
        <label>question set
          <select name="set">${sets.map((s) => `<option>${s}</option>`).join("")}</select>
        </label>
        <button type="submit">start</button>
      </form>
      <div class="error"></div>`;
    const form = root.querySelector("form") as HTMLFormElement;
    form.addEventListener("submit", async (event) => {
      event.preventDefault();
      const data = new FormData(form);
      try {
        await this.start(
          String(data.get("participant")),
          String(data.get("game")) as Game,
          String(data.get("set"))
        );
      } catch (err) {
        const box = root.querySelector(".error") as HTMLElement;
        box.textContent = err instanceof ApiError ? err.message : String(err);
      }
    });
    return root;
  }

  async start(participant: string, game: Game, set: string): Promise<void> {
    const info = await this.api.createSession(participant, game, set);
    this.state = newSession(info.session_id, participant, game, info.length);
    this.validation = { text: "", single: false, checking: false };
    this.selected = null;
    await this.advance();
  }

  private async advance(): Promise<void> {
    if (!this.state) return;
    const round = await this.api.nextRound(this.state.sessionId);
    this.state = withRound(this.state, round);
    this.selected = null;
    this.validation = { text: "", single: false, checking: false };
    this.render();
  }

  private async validateGuess(text: string): Promise<void> {
    this.validation = { text, single: false, checking: text.length > 0 };
    this.renderSoon();
    if (!text) return;
    const epoch = ++this.validationEpoch;
    try {
      const result = await this.api.tokenize(text);
      if (epoch === this.validationEpoch) {
        this.validation = { text, single: result.single, checking: false };
        this.render();
      }
    } catch {
      if (epoch === this.validationEpoch) {
        this.validation = { text, single: false, checking: false };
        this.render();
      }
    }
  }

  private async submitTop1(text: string): Promise<void> {
    if (!this.state || this.busy) return;
    this.busy = true;
    try {
      const result = await this.api.submitTop1(this.state.sessionId, text);
      this.state = afterTop1(this.state, text, result);
      this.error = "";
      await this.advance();
    } catch (err) {
      this.error = err instanceof ApiError ? err.message : String(err);
      this.render();
    } finally {
      this.busy = false;
    }
  }

  private async submitCompare(p: number): Promise<void> {
    if (!this.state || this.busy) return;
    this.busy = true;
    try {
      const result = await this.api.submitCompare(this.state.sessionId, p);
      this.state = afterCompare(this.state, p, result);
      this.error = "";
      await this.advance();
    } catch (err) {
      this.error = err instanceof ApiError ? err.message : String(err);
      this.render();
    } finally {
      this.busy = false;
    }
  }

  handleKey(event: KeyboardEvent): void {
    const state = this.state;
    if (!state || !state.round || state.round.done) return;
    if (state.round.game !== "compare") return;
    if (event.target instanceof HTMLInputElement && event.target.type === "text") return;
    const p = checkboxForKey(event.key, state.round.allowed);
    if (p !== null) {
      this.selected = p;
      this.render();
    } else if (event.key === "Enter" && this.selected !== null) {
      void this.submitCompare(this.selected);
    }
  }

  private renderSoon(): void {
    queueMicrotask(() => this.render());
  }

  render(): void {
    const state = this.state;
    if (!state || !state.round) return;
    let screen: HTMLElement;
    if (state.round.done) {
      screen = renderSummary(state);
    } else if (state.round.game === "top1") {
      screen = renderTop1Screen(state, this.validation, {
        onInput: (text) => void this.validateGuess(text),
        onSubmit: (text) => void this.submitTop1(text),
      });
    } else {
      screen = renderCompareScreen(state, this.selected, {
        onSelect: (p) => {
          this.selected = p;
          this.render();
        },
        onSubmit: (p) => void this.submitCompare(p),
      });
    }
    if (this.error) {
      const box = document.createElement("div");
      box.className = "error";
      box.textContent = this.error;
      screen.appendChild(box);
    }
    this.mount.replaceChildren(screen);
    const input = screen.querySelector("input[type=text]") as HTMLInputElement | null;
    if (input) {
      input.focus();
      input.setSelectionRange(input.value.length, input.value.length);
    }
  }
}
