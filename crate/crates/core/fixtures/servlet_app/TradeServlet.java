package org.acme.trade;

import javax.servlet.http.*;

public class TradeServlet {

    private final TradeLedger ledger;

    @PostMapping("/trade")
    public TradeReceipt doTrade(HttpServletRequest request) {
        return processTrade(request);
    }

    public TradeReceipt processTrade(HttpServletRequest request) {
        String action = request.getParameter("action");
        String rawQuantity = request.getParameter("quantity");
        int quantity = Integer.parseInt(rawQuantity);
        String symbol = readSymbol(request);
        return recordTrade(action, quantity, symbol);
    }

    public String readSymbol(HttpServletRequest request) {
        return request.getParameter("symbol");
    }

    public TradeReceipt recordTrade(String action, int quantity, String symbol) {
        return new TradeReceipt(action, quantity, symbol);
    }
}
